#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "learnreach/human_model.hpp"

namespace learnreach {

inline constexpr double kBeliefFloor = 1e-3;
inline constexpr double kBeliefCeil = 1.0 - 1e-3;

enum class LearnerKind { bayes, gradient };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::bayes;
  // Bayes: the estimate is b(tracked); `other` is the complementary intent.
  std::size_t tracked = 0;
  std::size_t other = 1;
  // Gradient: intent i of the human model holds the Q table for
  // w = weight_nodes[i].
  double learning_rate = 0.1;
  std::vector<double> weight_nodes;

  void validate(const HumanModel& model) const;  // throws ConfigError
};

struct BayesResult {
  double belief = 0.0;
  bool degenerate = false;  // both likelihoods were zero; belief unchanged
};

// Two-hypothesis Bayes rule on b = P(tracked), clamped to
// [kBeliefFloor, kBeliefCeil].
BayesResult bayes_update(double belief, double likelihood_tracked, double likelihood_other);

BayesResult bayes_update(double belief, const HumanModel& model, std::span<const double> x,
                         std::size_t action, std::size_t tracked, std::size_t other);

// F(w) = Q(x, u; w) - E_{u' ~ P(.|x; w)} Q(x, u'; w) at weight node `node`.
double weight_objective(const HumanModel& model, std::span<const double> x, std::size_t action,
                        std::size_t node);

// dF/dw at a weight node: central difference across neighbors, one-sided
// at either end of the weight grid.
double weight_gradient_at_node(const HumanModel& model, std::span<const double> x, std::size_t action,
                               std::span<const double> weight_nodes, std::size_t node);

// dF/dw at an arbitrary w, linear between the node gradients.
double weight_gradient(const HumanModel& model, std::span<const double> x, std::size_t action,
                       std::span<const double> weight_nodes, double w);

// w' = clamp(w + alpha * dF/dw, 0, 1).
double gradient_update(double w, const HumanModel& model, std::span<const double> x, std::size_t action,
                       std::span<const double> weight_nodes, double alpha);

// Learner dynamics f_L dispatching on the learner kind.
class Learner {
 public:
  explicit Learner(LearnerSpec spec) : spec_(std::move(spec)) {}

  const LearnerSpec& spec() const { return spec_; }
  double step(double estimate, const HumanModel& model, std::span<const double> x, std::size_t action,
              bool* degenerate = nullptr) const;

 private:
  LearnerSpec spec_;
};

}  // namespace learnreach
