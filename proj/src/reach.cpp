#include "learnreach/reach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "learnreach/errors.hpp"
#include "learnreach/parallel.hpp"

namespace learnreach {
namespace {

constexpr std::size_t kMaxActions = 32;

bool better(Strategy s, double candidate, double incumbent) {
  return s == Strategy::minimize ? candidate < incumbent : candidate > incumbent;
}

// Successor of a node, as the recursion sees it.
JointState successor(const GridSpace& grid, const JointSystem& system, const JointState& z, std::size_t a,
                     Interpolation mode) {
  JointState next = grid.clamp(system.step(z, a));
  if (mode == Interpolation::nearest) next = grid.node_state(grid.nearest_node(next));
  return next;
}

double eval(const GridSpace& grid, std::span<const double> values, const JointState& z, Interpolation mode) {
  if (mode == Interpolation::nearest) return values[grid.nearest_node(z)];
  return apply_stencil(grid.stencil(z), values);
}

void check_compatible(const GridSpace& grid, const JointSystem& system) {
  if (grid.physical_dims() != system.physical_dims() || grid.dims() != grid.physical_dims() + 1) {
    throw InconsistentSpec("grid must hold the human's physical dims plus one estimate dim");
  }
}

}  // namespace

TargetSpec TargetSpec::belief_at_least(double threshold) {
  TargetSpec t;
  t.kind = TargetKind::belief_at_least;
  t.threshold = threshold;
  return t;
}

TargetSpec TargetSpec::belief_at_most(double threshold) {
  TargetSpec t;
  t.kind = TargetKind::belief_at_most;
  t.threshold = threshold;
  return t;
}

TargetSpec TargetSpec::estimate_near(double center, double epsilon) {
  TargetSpec t;
  t.kind = TargetKind::estimate_near;
  t.center = center;
  t.epsilon = epsilon;
  return t;
}

TargetSpec TargetSpec::initial_set(const JointState& z0) {
  TargetSpec t;
  t.kind = TargetKind::initial_set;
  t.initial = z0;
  return t;
}

double margin(const TargetSpec& target, const JointState& z) {
  switch (target.kind) {
    case TargetKind::belief_at_least:
      return target.threshold - z.scalar_estimate();
    case TargetKind::belief_at_most:
      return z.scalar_estimate() - target.threshold;
    case TargetKind::estimate_near:
      return std::abs(z.scalar_estimate() - target.center) - target.epsilon;
    case TargetKind::initial_set: {
      double d = 0.0;
      for (std::size_t i = 0; i < z.dims(); ++i) d = std::max(d, std::abs(z[i] - target.initial[i]));
      return d - target.epsilon;
    }
  }
  return 0.0;
}

std::size_t QuerySpec::steps() const {
  if (!(dt > 0.0) || horizon < 0.0) throw InconsistentSpec("query needs dt > 0 and horizon >= 0");
  const double ratio = horizon / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-6) {
    std::ostringstream os;
    os << "horizon " << horizon << " s is not an integer multiple of dt " << dt << " s";
    throw InconsistentSpec(os.str());
  }
  return static_cast<std::size_t>(n);
}

JointSystem::JointSystem(std::shared_ptr<const HumanModel> human, Learner learner)
    : human_(std::move(human)), learner_(std::move(learner)) {
  learner_.spec().validate(*human_);
}

JointState JointSystem::step(const JointState& z, std::size_t action) const {
  JointState next = z;
  human_->step(z.physical(), action, next.physical());
  next.set_scalar_estimate(learner_.step(z.scalar_estimate(), *human_, z.physical(), action));
  return next;
}

std::vector<std::size_t> JointSystem::admissible(const JointState& z, const ControlRestriction& restriction) const {
  std::vector<std::size_t> out;
  if (restriction.active) {
    out = human_->restricted_controls(z.physical(), restriction.intent, restriction.delta);
  } else {
    out.resize(num_actions());
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = a;
  }
  std::erase_if(out, [&](std::size_t a) { return human_->blocked(z.physical(), a); });
  return out;
}

double ValueSolution::evaluate(std::size_t k, const JointState& z) const {
  if (!has_slices()) throw StaleSolution("value slices were not retained");
  return eval(*grid, slices[std::min(k, steps)], z, spec.interpolation);
}

ValueSolution solve_backward(const QuerySpec& spec, std::shared_ptr<const GridSpace> grid_ptr,
                             const JointSystem& system) {
  const GridSpace& grid = *grid_ptr;
  check_compatible(grid, system);
  if (std::abs(spec.dt - system.dt()) > 1e-9) {
    std::ostringstream os;
    os << "query dt " << spec.dt << " s differs from model dt " << system.dt() << " s";
    throw InconsistentSpec(os.str());
  }
  if (spec.restriction.active && (spec.restriction.delta < 0.0 || spec.restriction.delta > 1.0)) {
    throw InconsistentSpec("restriction delta must lie in [0, 1]");
  }
  const std::size_t steps = spec.steps();
  const std::size_t n = grid.node_count();
  const std::size_t na = system.num_actions();
  if (na > kMaxActions) throw InconsistentSpec("too many actions");

  // Time-invariant pieces: margin, admissible set and successor states.
  std::vector<double> target(n);
  std::vector<std::uint8_t> masked(n);
  std::vector<std::uint32_t> allowed(n);
  std::vector<JointState> succ(n * na);
  parallel_for(n, spec.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const JointState z = grid.node_state(i);
      masked[i] = system.occupied(z);
      target[i] = masked[i] ? kLarge : margin(spec.target, z);
      if (masked[i]) continue;
      std::uint32_t bits = 0;
      for (std::size_t a : system.admissible(z, spec.restriction)) {
        bits |= 1u << a;
        succ[i * na + a] = successor(grid, system, z, a, spec.interpolation);
      }
      allowed[i] = bits;
    }
  });

  ValueSolution sol;
  sol.grid = grid_ptr;
  sol.spec = spec;
  sol.steps = steps;
  sol.arrival.assign(n, kNeverArrives);
  for (std::size_t i = 0; i < n; ++i) {
    if (target[i] <= 0.0) sol.arrival[i] = 0;
  }
  if (spec.retain_slices) {
    sol.slices.reserve(steps + 1);
    sol.slices.push_back(target);
  }

  std::vector<double> prev = target;
  std::vector<double> next(n);
  for (std::size_t k = 1; k <= steps; ++k) {
    parallel_for(n, spec.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        if (masked[i]) {
          next[i] = kLarge;
          continue;
        }
        const std::uint32_t bits = allowed[i];
        double best = prev[i];  // no admissible action: the human stays put
        bool first = true;
        for (std::size_t a = 0; a < na; ++a) {
          if (!((bits >> a) & 1u)) continue;
          const double v = eval(grid, prev, succ[i * na + a], spec.interpolation);
          if (first || better(spec.strategy, v, best)) best = v;
          first = false;
        }
        next[i] = std::min(target[i], best);
        if (sol.arrival[i] == kNeverArrives && next[i] <= 0.0) sol.arrival[i] = static_cast<std::int32_t>(k);
      }
    });
    if (spec.retain_slices) sol.slices.push_back(next);
    prev.swap(next);
  }
  sol.final_values = std::move(prev);
  return sol;
}

std::optional<std::size_t> ttl_steps(const ValueSolution& solution, const JointState& z0, TtlRule rule) {
  if (rule == TtlRule::automatic) rule = solution.has_slices() ? TtlRule::interpolated : TtlRule::conservative;
  const GridSpace& grid = *solution.grid;
  if (rule == TtlRule::interpolated) {
    if (!solution.has_slices()) throw StaleSolution("interpolated TTL needs retained slices");
    for (std::size_t k = 0; k <= solution.steps; ++k) {
      if (eval(grid, solution.slices[k], z0, solution.spec.interpolation) <= 0.0) return k;
    }
    return std::nullopt;
  }
  std::int32_t worst = 0;
  auto visit = [&](std::size_t node) {
    const std::int32_t a = solution.arrival[node];
    if (a == kNeverArrives || worst == kNeverArrives) {
      worst = kNeverArrives;
    } else {
      worst = std::max(worst, a);
    }
  };
  if (solution.spec.interpolation == Interpolation::nearest) {
    visit(grid.nearest_node(z0));
  } else {
    const Stencil s = grid.stencil(z0);
    for (std::size_t i = 0; i < s.count; ++i) visit(s.nodes[i]);
  }
  if (worst == kNeverArrives) return std::nullopt;
  return static_cast<std::size_t>(worst);
}

std::optional<double> extract_ttl(const ValueSolution& solution, const JointState& z0, TtlRule rule) {
  const auto k = ttl_steps(solution, z0, rule);
  if (!k) return std::nullopt;
  return static_cast<double>(*k) * solution.spec.dt;
}

Rollout extract_policy_rollout(const ValueSolution& solution, const JointSystem& system, const JointState& z0,
                               std::size_t max_steps) {
  if (!solution.has_slices()) throw StaleSolution("policy extraction needs retained value slices");
  const GridSpace& grid = *solution.grid;
  const QuerySpec& spec = solution.spec;
  const double never = std::numeric_limits<double>::infinity();

  auto time_to_go = [&](const JointState& z) {
    for (std::size_t k = 0; k <= solution.steps; ++k) {
      if (eval(grid, solution.slices[k], z, spec.interpolation) <= 0.0) return static_cast<double>(k);
    }
    return never;
  };

  Rollout out;
  JointState z = grid.clamp(z0);
  if (spec.interpolation == Interpolation::nearest) z = grid.node_state(grid.nearest_node(z));
  out.states.push_back(z);
  if (margin(spec.target, z) <= 0.0) {
    out.crossing_step = 0;
    return out;
  }
  for (std::size_t s = 0; s < max_steps; ++s) {
    const auto actions = system.admissible(z, spec.restriction);
    if (actions.empty()) break;
    const std::size_t slice = s + 1 >= solution.steps ? 0 : solution.steps - s - 1;
    std::size_t best_a = actions.front();
    JointState best_z;
    double best_ttg = 0.0;
    double best_v = 0.0;
    bool first = true;
    for (std::size_t a : actions) {
      const JointState nz = successor(grid, system, z, a, spec.interpolation);
      const double ttg = time_to_go(nz);
      const double v = eval(grid, solution.slices[slice], nz, spec.interpolation);
      const bool take = first || better(spec.strategy, ttg, best_ttg) ||
                        (ttg == best_ttg && better(spec.strategy, v, best_v));
      if (take) {
        best_a = a;
        best_z = nz;
        best_ttg = ttg;
        best_v = v;
        first = false;
      }
    }
    z = best_z;
    out.actions.push_back(best_a);
    out.states.push_back(z);
    if (margin(spec.target, z) <= 0.0) {
      out.crossing_step = s + 1;
      break;
    }
  }
  return out;
}

std::size_t ForwardSolution::marked_count(std::size_t step) const {
  return static_cast<std::size_t>(std::count_if(arrival.begin(), arrival.end(), [&](std::int32_t a) {
    return a != kNeverArrives && static_cast<std::size_t>(a) <= step;
  }));
}

ForwardSolution solve_forward(std::shared_ptr<const GridSpace> grid_ptr, const JointSystem& system,
                              const TargetSpec& initial, std::size_t steps, const ControlRestriction& restriction,
                              unsigned threads) {
  if (initial.kind != TargetKind::initial_set) throw InconsistentSpec("forward solve needs an initial_set target");
  const GridSpace& grid = *grid_ptr;
  check_compatible(grid, system);
  const std::size_t na = system.num_actions();

  ForwardSolution out;
  out.grid = grid_ptr;
  out.steps = steps;
  out.dt = system.dt();
  out.arrival.assign(grid.node_count(), kNeverArrives);

  const std::size_t start = grid.nearest_node(grid.clamp(initial.initial));
  out.arrival[start] = 0;
  std::vector<std::size_t> frontier{start};
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> reached;
  for (std::size_t k = 0; k < steps && !frontier.empty(); ++k) {
    reached.assign(frontier.size() * na, kNone);
    parallel_for(frontier.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t f = b; f < e; ++f) {
        const JointState z = grid.node_state(frontier[f]);
        for (std::size_t a : system.admissible(z, restriction)) {
          reached[f * na + a] = grid.nearest_node(grid.clamp(system.step(z, a)));
        }
      }
    });
    std::vector<std::size_t> next;
    for (std::size_t node : reached) {
      if (node == kNone || out.arrival[node] != kNeverArrives) continue;
      out.arrival[node] = static_cast<std::int32_t>(k + 1);
      next.push_back(node);
    }
    std::sort(next.begin(), next.end());
    frontier.swap(next);
  }
  return out;
}

}  // namespace learnreach
