#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "learnreach/grid.hpp"
#include "learnreach/human_model.hpp"
#include "learnreach/learner.hpp"

namespace learnreach {

enum class TargetKind { belief_at_least, belief_at_most, estimate_near, initial_set };

// Target set L = {z : margin(z) <= 0}.
struct TargetSpec {
  TargetKind kind = TargetKind::belief_at_least;
  double threshold = 0.9;  // belief_at_least / belief_at_most
  double center = 0.0;     // estimate_near
  double epsilon = 0.0;    // estimate_near, initial_set
  JointState initial;      // initial_set

  static TargetSpec belief_at_least(double threshold);
  static TargetSpec belief_at_most(double threshold);
  static TargetSpec estimate_near(double center, double epsilon);
  static TargetSpec initial_set(const JointState& z0);
};

// belief_at_least: threshold - b. belief_at_most: b - threshold.
// estimate_near: |estimate - center| - epsilon. initial_set: max-norm
// distance to the initial state minus epsilon.
double margin(const TargetSpec& target, const JointState& z);

enum class Strategy { minimize, maximize };

// U^t = {u : P(u | x; intent) >= delta}; inactive means U^t = U.
struct ControlRestriction {
  bool active = false;
  std::size_t intent = 0;
  double delta = 0.0;

  static ControlRestriction none() { return {}; }
  static ControlRestriction likely_under(std::size_t intent, double delta) { return {true, intent, delta}; }
};

struct QuerySpec {
  TargetSpec target;
  Strategy strategy = Strategy::minimize;
  double horizon = 0.0;  // seconds
  double dt = 0.1;       // seconds
  ControlRestriction restriction;
  Interpolation interpolation = Interpolation::multilinear;
  bool retain_slices = false;
  unsigned threads = 0;

  // horizon / dt; throws InconsistentSpec unless it is an integer.
  std::size_t steps() const;
};

// Human physical dynamics stacked with the learner update:
// z' = [f_H(x, u), f_L(estimate, x, u)].
class JointSystem {
 public:
  JointSystem(std::shared_ptr<const HumanModel> human, Learner learner);

  const HumanModel& human() const { return *human_; }
  const Learner& learner() const { return learner_; }
  double dt() const { return human_->dt(); }
  std::size_t num_actions() const { return human_->num_actions(); }
  std::size_t physical_dims() const { return human_->physical_dims(); }

  JointState step(const JointState& z, std::size_t action) const;
  bool occupied(const JointState& z) const { return human_->occupied(z.physical()); }

  // Restricted controls that do not step into an occupied cell. May be
  // empty when every action is blocked.
  std::vector<std::size_t> admissible(const JointState& z, const ControlRestriction& restriction) const;

 private:
  std::shared_ptr<const HumanModel> human_;
  Learner learner_;
};

inline constexpr std::int32_t kNeverArrives = -1;

// Result of the backward recursion. slices[k] holds the value with k steps
// to go, i.e. V^{T - k dt}; slices[0] = l and slices[steps] = V^0.
struct ValueSolution {
  std::shared_ptr<const GridSpace> grid;
  QuerySpec spec;
  std::size_t steps = 0;
  std::vector<double> final_values;   // V^0 per node
  std::vector<std::int32_t> arrival;  // earliest k with V^{T-k dt} <= 0, or kNeverArrives
  std::vector<std::vector<double>> slices;

  bool has_slices() const { return !slices.empty(); }
  NodeField final_slice() const { return NodeField(grid, final_values); }
  double evaluate(std::size_t k, const JointState& z) const;  // needs slices
};

ValueSolution solve_backward(const QuerySpec& spec, std::shared_ptr<const GridSpace> grid,
                             const JointSystem& system);

enum class TtlRule {
  automatic,     // interpolated when slices are retained, else conservative
  interpolated,  // smallest k with V^{T-k dt}(z0) <= 0 from retained slices
  conservative,  // max arrival over the enclosing nodes
};

std::optional<std::size_t> ttl_steps(const ValueSolution& solution, const JointState& z0,
                                     TtlRule rule = TtlRule::automatic);
// Seconds, or nullopt when unreachable within the horizon.
std::optional<double> extract_ttl(const ValueSolution& solution, const JointState& z0,
                                  TtlRule rule = TtlRule::automatic);

struct Rollout {
  std::vector<JointState> states;    // states.size() == actions.size() + 1
  std::vector<std::size_t> actions;
  std::optional<std::size_t> crossing_step;  // first step with l(z) <= 0
};

// Greedy rollout of the optimal control. At each step the admissible action
// whose successor has the best time-to-go (min for minimize, max for
// maximize) is taken; remaining ties use V^{t+dt} at the successor, then the
// lowest action index. Under nearest-node interpolation states are snapped
// to nodes exactly as in the recursion.
Rollout extract_policy_rollout(const ValueSolution& solution, const JointSystem& system, const JointState& z0,
                               std::size_t max_steps);

struct ForwardSolution {
  std::shared_ptr<const GridSpace> grid;
  std::size_t steps = 0;
  double dt = 0.0;
  std::vector<std::int32_t> arrival;  // earliest step each node is marked

  std::size_t marked_count(std::size_t step) const;
};

// Frontier propagation from the node nearest to the initial state.
ForwardSolution solve_forward(std::shared_ptr<const GridSpace> grid, const JointSystem& system,
                              const TargetSpec& initial, std::size_t steps,
                              const ControlRestriction& restriction = {}, unsigned threads = 0);

}  // namespace learnreach
