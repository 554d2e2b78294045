#include "learnreach/learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "learnreach/errors.hpp"

namespace learnreach {
namespace {
constexpr std::size_t kMaxActions = 32;
}

void LearnerSpec::validate(const HumanModel& model) const {
  if (kind == LearnerKind::bayes) {
    if (model.num_intents() < 2) throw ConfigError("learner", "belief learner needs at least two intents");
    if (tracked >= model.num_intents()) throw ConfigError("learner.tracked", "intent index out of range");
    if (other >= model.num_intents() || other == tracked) {
      throw ConfigError("learner.other", "must be a different valid intent index");
    }
    return;
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learner.learning_rate", "must be > 0");
  if (weight_nodes.size() < 2) throw ConfigError("learner.weight_nodes", "need at least two weight nodes");
  if (weight_nodes.size() != model.num_intents()) {
    throw ConfigError("learner.weight_nodes", "must match the number of human model intents");
  }
  for (std::size_t i = 1; i < weight_nodes.size(); ++i) {
    if (!(weight_nodes[i] > weight_nodes[i - 1])) {
      throw ConfigError("learner.weight_nodes", "must be strictly increasing");
    }
  }
  if (weight_nodes.front() < 0.0 || weight_nodes.back() > 1.0) {
    throw ConfigError("learner.weight_nodes", "must lie in [0, 1]");
  }
}

BayesResult bayes_update(double belief, double likelihood_tracked, double likelihood_other) {
  const double num = likelihood_tracked * belief;
  const double den = num + likelihood_other * (1.0 - belief);
  if (!(den > 0.0)) return {std::clamp(belief, kBeliefFloor, kBeliefCeil), true};
  return {std::clamp(num / den, kBeliefFloor, kBeliefCeil), false};
}

BayesResult bayes_update(double belief, const HumanModel& model, std::span<const double> x,
                         std::size_t action, std::size_t tracked, std::size_t other) {
  return bayes_update(belief, model.likelihood(x, action, tracked), model.likelihood(x, action, other));
}

double weight_objective(const HumanModel& model, std::span<const double> x, std::size_t action,
                        std::size_t node) {
  const std::size_t n = model.num_actions();
  std::array<double, kMaxActions> q{};
  std::array<double, kMaxActions> p{};
  model.q_values(x, node, std::span<double>(q.data(), n));
  softmax_likelihoods(std::span<const double>(q.data(), n), model.beta(node), std::span<double>(p.data(), n));
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 0.0) expected += p[i] * q[i];
  }
  return q[action] - expected;
}

double weight_gradient_at_node(const HumanModel& model, std::span<const double> x, std::size_t action,
                               std::span<const double> weight_nodes, std::size_t node) {
  const std::size_t last = weight_nodes.size() - 1;
  const std::size_t lo = node == 0 ? 0 : node - 1;
  const std::size_t hi = node == last ? last : node + 1;
  return (weight_objective(model, x, action, hi) - weight_objective(model, x, action, lo)) /
         (weight_nodes[hi] - weight_nodes[lo]);
}

double weight_gradient(const HumanModel& model, std::span<const double> x, std::size_t action,
                       std::span<const double> weight_nodes, double w) {
  const auto it = std::lower_bound(weight_nodes.begin(), weight_nodes.end(), w);
  if (it == weight_nodes.begin()) return weight_gradient_at_node(model, x, action, weight_nodes, 0);
  if (it == weight_nodes.end()) return weight_gradient_at_node(model, x, action, weight_nodes, weight_nodes.size() - 1);
  const auto hi = static_cast<std::size_t>(it - weight_nodes.begin());
  if (*it == w) return weight_gradient_at_node(model, x, action, weight_nodes, hi);
  const std::size_t lo = hi - 1;
  const double t = (w - weight_nodes[lo]) / (weight_nodes[hi] - weight_nodes[lo]);
  return (1.0 - t) * weight_gradient_at_node(model, x, action, weight_nodes, lo) +
         t * weight_gradient_at_node(model, x, action, weight_nodes, hi);
}

double gradient_update(double w, const HumanModel& model, std::span<const double> x, std::size_t action,
                       std::span<const double> weight_nodes, double alpha) {
  return std::clamp(w + alpha * weight_gradient(model, x, action, weight_nodes, w), 0.0, 1.0);
}

double Learner::step(double estimate, const HumanModel& model, std::span<const double> x, std::size_t action,
                     bool* degenerate) const {
  if (spec_.kind == LearnerKind::bayes) {
    const BayesResult r = bayes_update(estimate, model, x, action, spec_.tracked, spec_.other);
    if (degenerate) *degenerate = r.degenerate;
    return r.belief;
  }
  if (degenerate) *degenerate = false;
  return gradient_update(estimate, model, x, action, spec_.weight_nodes, spec_.learning_rate);
}

}  // namespace learnreach
