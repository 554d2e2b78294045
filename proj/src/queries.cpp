#include "learnreach/queries.hpp"

#include <algorithm>
#include <cmath>

#include "learnreach/errors.hpp"

namespace learnreach {

TtlAggregate aggregate(const std::vector<std::optional<double>>& values) {
  TtlAggregate a;
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) {
      ++a.unreachable;
      continue;
    }
    ++a.finite;
    sum += *v;
  }
  if (a.finite == 0) return a;
  a.mean = sum / static_cast<double>(a.finite);
  double sq = 0.0;
  for (const auto& v : values) {
    if (v) sq += (*v - a.mean) * (*v - a.mean);
  }
  a.stddev = std::sqrt(sq / static_cast<double>(a.finite));
  return a;
}

TtlAggregate TTLReport::by_prior(std::size_t prior) const {
  std::vector<std::optional<double>> v;
  for (std::size_t s = 0; s < states.size(); ++s) v.push_back(at(s, prior));
  return aggregate(v);
}

TtlAggregate TTLReport::by_state(std::size_t state) const {
  std::vector<std::optional<double>> v;
  for (std::size_t p = 0; p < priors.size(); ++p) v.push_back(at(state, p));
  return aggregate(v);
}

TtlAggregate TTLReport::over_states(const std::vector<std::size_t>& subset) const {
  std::vector<std::optional<double>> v;
  for (std::size_t s : subset) {
    for (std::size_t p = 0; p < priors.size(); ++p) v.push_back(at(s, p));
  }
  return aggregate(v);
}

JointState make_joint_state(std::span<const double> physical, double estimate) {
  const double e[1] = {estimate};
  return JointState(physical, std::span<const double>(e, 1));
}

TTLReport ttl_sweep(const ValueSolution& solution, const std::vector<std::vector<double>>& states,
                    const std::vector<double>& priors) {
  TTLReport r;
  r.mode = solution.spec.strategy;
  r.horizon = solution.spec.horizon;
  r.dt = solution.spec.dt;
  r.states = states;
  r.priors = priors;
  r.backward_solves = 0;
  const TtlRule rule = r.mode == Strategy::maximize || !solution.has_slices() ? TtlRule::conservative
                                                                              : TtlRule::interpolated;
  r.ttl.reserve(states.size() * priors.size());
  for (const auto& x : states) {
    for (double b : priors) r.ttl.push_back(extract_ttl(solution, make_joint_state(x, b), rule));
  }
  return r;
}

TTLReport ttl_sweep(const QuerySpec& spec, std::shared_ptr<const GridSpace> grid, const JointSystem& system,
                    const std::vector<std::vector<double>>& states, const std::vector<double>& priors) {
  QuerySpec s = spec;
  s.retain_slices = spec.strategy == Strategy::minimize;
  const ValueSolution sol = solve_backward(s, std::move(grid), system);
  TTLReport r = ttl_sweep(sol, states, priors);
  r.backward_solves = 1;
  return r;
}

std::optional<std::size_t> BranchTime::steps() const {
  if (!t_b) return std::nullopt;
  return static_cast<std::size_t>(std::lround(*t_b / dt));
}

double BranchTime::require() const {
  if (!t_b) throw UnreachableWithinHorizon("branching time: a worst-case TTL is not reached within the horizon");
  return *t_b;
}

BranchTimeSolutions solve_branching(const BranchTimeQuery& query, std::shared_ptr<const GridSpace> grid,
                                    const JointSystem& system) {
  auto solve = [&](bool first) {
    QuerySpec s = query.base;
    s.strategy = Strategy::maximize;
    s.retain_slices = false;
    s.target = first ? TargetSpec::belief_at_least(query.confidence)
                     : TargetSpec::belief_at_most(1.0 - query.confidence);
    s.restriction = ControlRestriction::likely_under(first ? query.first : query.second, query.delta);
    return solve_backward(s, grid, system);
  };
  return {solve(true), solve(false)};
}

BranchTime branching_time(const BranchTimeSolutions& solutions, const JointState& z0) {
  BranchTime out;
  out.dt = solutions.first.spec.dt;
  out.ttl[0] = extract_ttl(solutions.first, z0, TtlRule::conservative);
  out.ttl[1] = extract_ttl(solutions.second, z0, TtlRule::conservative);
  if (out.ttl[0] && out.ttl[1]) out.t_b = std::max(*out.ttl[0], *out.ttl[1]);
  return out;
}

BranchTime branching_time(const BranchTimeQuery& query, std::shared_ptr<const GridSpace> grid,
                          const JointSystem& system, const JointState& z0) {
  return branching_time(solve_branching(query, std::move(grid), system), z0);
}

BehaviorTrace synthesize_behavior(const BehaviorQuery& query, BehaviorMode mode,
                                  std::shared_ptr<const GridSpace> grid, const JointSystem& system,
                                  const JointState& z0) {
  if (system.learner().spec().kind != LearnerKind::bayes || system.learner().spec().tracked != query.goal) {
    throw InconsistentSpec("behavior synthesis needs a Bayes learner tracking the analyzed goal");
  }
  QuerySpec s = query.base;
  s.strategy = mode == BehaviorMode::legible ? Strategy::minimize : Strategy::maximize;
  s.retain_slices = true;
  s.target = TargetSpec::belief_at_least(query.confidence);
  s.restriction = ControlRestriction::likely_under(query.goal, query.delta);
  const ValueSolution sol = solve_backward(s, std::move(grid), system);
  const Rollout r = extract_policy_rollout(sol, system, z0, sol.steps);
  BehaviorTrace t;
  t.mode = mode;
  t.states = r.states;
  t.actions = r.actions;
  t.crossing_step = r.crossing_step;
  t.ttl_steps = ttl_steps(sol, z0, TtlRule::interpolated);
  return t;
}

Rollout argmax_q_rollout(const JointSystem& system, const TargetSpec& target, std::size_t intent,
                         const JointState& z0, std::size_t max_steps) {
  const HumanModel& human = system.human();
  std::vector<double> q(human.num_actions());
  Rollout out;
  JointState z = z0;
  out.states.push_back(z);
  if (margin(target, z) <= 0.0) {
    out.crossing_step = 0;
    return out;
  }
  for (std::size_t s = 0; s < max_steps; ++s) {
    human.q_values(z.physical(), intent, q);
    std::optional<std::size_t> best;
    for (std::size_t a = 0; a < q.size(); ++a) {
      if (human.blocked(z.physical(), a)) continue;
      if (!best || q[a] > q[*best]) best = a;
    }
    if (!best) break;
    z = system.step(z, *best);
    out.actions.push_back(*best);
    out.states.push_back(z);
    if (margin(target, z) <= 0.0) {
      out.crossing_step = s + 1;
      break;
    }
  }
  return out;
}

std::size_t WeightHeatmap::reachable_count(std::size_t row) const {
  return static_cast<std::size_t>(
      std::count_if(arrival[row].begin(), arrival[row].end(), [](const auto& v) { return v.has_value(); }));
}

std::optional<double> WeightHeatmap::arrival_at(std::size_t row, double w_star) const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < targets.size(); ++c) {
    if (std::abs(targets[c] - w_star) < std::abs(targets[best] - w_star)) best = c;
  }
  return arrival[row][best];
}

std::size_t WeightHeatmap::order_violations() const {
  std::size_t count = 0;
  for (std::size_t r = 0; r < initial.size(); ++r) {
    std::size_t start = 0;
    for (std::size_t c = 1; c < targets.size(); ++c) {
      if (std::abs(targets[c] - initial[r]) < std::abs(targets[start] - initial[r])) start = c;
    }
    auto check = [&](std::size_t from, std::size_t to) {
      const auto& a = arrival[r][from];
      const auto& b = arrival[r][to];
      if (a && b && *b < *a) ++count;
    };
    for (std::size_t c = start; c + 1 < targets.size(); ++c) check(c, c + 1);
    for (std::size_t c = start; c > 0; --c) check(c, c - 1);
  }
  return count;
}

WeightHeatmap reachable_weights(std::shared_ptr<const GridSpace> grid, const JointSystem& system,
                                std::span<const double> x0, const std::vector<double>& initial_weights,
                                std::size_t steps, const ControlRestriction& restriction, unsigned threads) {
  const GridSpace& g = *grid;
  const std::size_t ed = g.physical_dims();
  WeightHeatmap h;
  h.dt = system.dt();
  h.steps = steps;
  h.initial = initial_weights;
  for (std::size_t i = 0; i < g.axis(ed).nodes; ++i) h.targets.push_back(g.axis(ed).node(i));
  for (double w0 : initial_weights) {
    const ForwardSolution fwd =
        solve_forward(grid, system, TargetSpec::initial_set(make_joint_state(x0, w0)), steps, restriction, threads);
    std::vector<std::int32_t> best(h.targets.size(), kNeverArrives);
    for (std::size_t node = 0; node < fwd.arrival.size(); ++node) {
      const std::int32_t a = fwd.arrival[node];
      if (a == kNeverArrives) continue;
      auto& b = best[g.axis_index(node, ed)];
      if (b == kNeverArrives || a < b) b = a;
    }
    std::vector<std::optional<double>> row;
    for (std::int32_t b : best) {
      row.push_back(b == kNeverArrives ? std::nullopt : std::optional<double>(static_cast<double>(b) * h.dt));
    }
    h.arrival.push_back(std::move(row));
  }
  return h;
}

}  // namespace learnreach
