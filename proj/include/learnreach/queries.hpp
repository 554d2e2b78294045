#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "learnreach/reach.hpp"

namespace learnreach {

struct TtlAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::size_t finite = 0;
  std::size_t unreachable = 0;
};

// TTLs for every (initial physical state, prior) pair of a sweep.
struct TTLReport {
  Strategy mode = Strategy::minimize;
  double horizon = 0.0;
  double dt = 0.0;
  std::vector<std::vector<double>> states;  // physical coordinates
  std::vector<double> priors;
  std::vector<std::optional<double>> ttl;  // row-major, states x priors; seconds
  std::size_t backward_solves = 0;

  const std::optional<double>& at(std::size_t state, std::size_t prior) const {
    return ttl[state * priors.size() + prior];
  }
  // Over all states at one prior.
  TtlAggregate by_prior(std::size_t prior) const;
  // Over all priors at one state.
  TtlAggregate by_state(std::size_t state) const;
  // Over a subset of states and every prior.
  TtlAggregate over_states(const std::vector<std::size_t>& states) const;
};

TtlAggregate aggregate(const std::vector<std::optional<double>>& values);

// One backward solve, read at every query point. Best-case (minimize)
// queries read interpolated slices; worst-case (maximize) queries use the
// conservative corner rule.
TTLReport ttl_sweep(const QuerySpec& spec, std::shared_ptr<const GridSpace> grid, const JointSystem& system,
                    const std::vector<std::vector<double>>& states, const std::vector<double>& priors);
TTLReport ttl_sweep(const ValueSolution& solution, const std::vector<std::vector<double>>& states,
                    const std::vector<double>& priors);

JointState make_joint_state(std::span<const double> physical, double estimate);

struct BranchTimeQuery {
  QuerySpec base;  // horizon, dt, interpolation, threads; strategy is forced to maximize
  double delta = 0.27;
  double confidence = 0.9;
  // The system's learner tracks b(first); the second intent is the
  // complementary hypothesis.
  std::size_t first = 0;
  std::size_t second = 1;
};

struct BranchTime {
  std::array<std::optional<double>, 2> ttl;  // worst-case TTL per intent, seconds
  std::optional<double> t_b;                 // max of the two; nullopt if either is unreachable
  double dt = 0.0;

  std::optional<std::size_t> steps() const;
  // t_b, throwing UnreachableWithinHorizon when it does not exist.
  double require() const;
};

// The two worst-case solves behind a branching time: b(first) >=
// confidence with controls likely under `first`, and b(first) <=
// 1 - confidence with controls likely under `second`.
struct BranchTimeSolutions {
  ValueSolution first;
  ValueSolution second;
};
BranchTimeSolutions solve_branching(const BranchTimeQuery& query, std::shared_ptr<const GridSpace> grid,
                                    const JointSystem& system);

// Conservative worst-case TTLs at z0 and t_b = max of the two.
BranchTime branching_time(const BranchTimeSolutions& solutions, const JointState& z0);
BranchTime branching_time(const BranchTimeQuery& query, std::shared_ptr<const GridSpace> grid,
                          const JointSystem& system, const JointState& z0);

enum class BehaviorMode { legible, deceptive };

struct BehaviorTrace {
  BehaviorMode mode = BehaviorMode::legible;
  std::vector<JointState> states;
  std::vector<std::size_t> actions;
  std::optional<std::size_t> crossing_step;
  std::optional<std::size_t> ttl_steps;  // from the solve that produced the trace
};

struct BehaviorQuery {
  QuerySpec base;  // horizon, dt, interpolation, threads
  std::size_t goal = 0;  // g*, the learner's tracked intent
  double delta = 0.15;
  double confidence = 0.9;
};

// Legible = best-case solve and rollout, deceptive = worst-case.
BehaviorTrace synthesize_behavior(const BehaviorQuery& query, BehaviorMode mode,
                                  std::shared_ptr<const GridSpace> grid, const JointSystem& system,
                                  const JointState& z0);

// Rollout of the human's most likely action under `intent` (lowest index
// among ties; blocked actions skipped) with the learner updating along the
// way. Stops once l(z) <= 0.
Rollout argmax_q_rollout(const JointSystem& system, const TargetSpec& target, std::size_t intent,
                         const JointState& z0, std::size_t max_steps);

struct WeightHeatmap {
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<double> initial;   // w0 per row
  std::vector<double> targets;   // w* per column (estimate-axis nodes)
  std::vector<std::vector<std::optional<double>>> arrival;  // seconds

  std::size_t reachable_count(std::size_t row) const;
  std::optional<double> arrival_at(std::size_t row, double w_star) const;
  // Adjacent pairs along each row, moving away from w0, whose arrival time
  // decreases. Reported only.
  std::size_t order_violations() const;
};

// One forward solve per w0 from the physical state x0. Arrival at a w*
// column is the earliest step at which any node with that estimate index
// is marked.
WeightHeatmap reachable_weights(std::shared_ptr<const GridSpace> grid, const JointSystem& system,
                                std::span<const double> x0, const std::vector<double>& initial_weights,
                                std::size_t steps, const ControlRestriction& restriction = {},
                                unsigned threads = 0);

}  // namespace learnreach
