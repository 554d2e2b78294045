// Runs every acceptance criterion and prints one PASS/FAIL line each.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "learnreach/cli.hpp"
#include "learnreach/queries.hpp"
#include "learnreach/scenarios.hpp"
#include "support/tiny_instance.hpp"

using namespace learnreach;
using learnreach::testing::enumerate_sequences;
using learnreach::testing::make_tiny_instance;
using learnreach::testing::OracleResult;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double or_inf(const std::optional<double>& v) { return v ? *v : kInf; }
double or_inf(const std::optional<std::size_t>& v) { return v ? static_cast<double>(*v) : kInf; }

ScenarioConfig fixture_config(const std::string& name) {
  return load_scenario_config(fs::path(LEARNREACH_FIXTURE_DIR) / "scenarios" / (name + ".json"));
}

// Monotonicity of every retained-slice solve run by this binary.
struct MonotonicityLog {
  std::size_t solves = 0;
  std::size_t violations = 0;

  void record(const ValueSolution& s) {
    ++solves;
    for (std::size_t k = 1; k < s.slices.size(); ++k) {
      for (std::size_t i = 0; i < s.slices[k].size(); ++i) {
        if (s.slices[k][i] > s.slices[k - 1][i]) ++violations;
      }
    }
  }
};

MonotonicityLog g_monotone;

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  const int instances = 24;
  std::size_t value_mismatch = 0, ttl_mismatch = 0, nodes = 0;
  for (int i = 0; i < instances; ++i) {
    auto inst = make_tiny_instance(rng);
    QuerySpec lo = inst.spec, hi = inst.spec;
    hi.strategy = Strategy::maximize;
    const auto vmin = solve_backward(lo, inst.grid, *inst.system);
    const auto vmax = solve_backward(hi, inst.grid, *inst.system);
    g_monotone.record(vmin);
    g_monotone.record(vmax);
    const std::size_t steps = inst.spec.steps();
    for (std::size_t node = 0; node < inst.grid->node_count(); ++node) {
      const JointState z = inst.grid->node_state(node);
      if (inst.system->occupied(z)) continue;
      ++nodes;
      const OracleResult o = enumerate_sequences(*inst.grid, *inst.system, inst.spec, node, steps);
      if (vmin.final_values[node] != o.min_value || vmax.final_values[node] != o.max_value) ++value_mismatch;
      auto expect = [](std::size_t hit) {
        return hit == OracleResult::kNoHit ? std::optional<double>() : std::optional<double>(static_cast<double>(hit));
      };
      if (extract_ttl(vmin, z) != expect(o.min_first_hit)) ++ttl_mismatch;
      if (extract_ttl(vmax, z) != expect(o.max_first_hit)) ++ttl_mismatch;
    }
  }
  const double t = seconds_since(t0);
  return {value_mismatch == 0 && ttl_mismatch == 0 && t < 10.0,
          fmt("%d instances, %zu nodes, %zu value and %zu TTL mismatches, %.2f s (limit 10 s)", instances, nodes,
              value_mismatch, ttl_mismatch, t)};
}

Outcome best_not_after_worst(const ScenarioInstance& leg) {
  std::size_t violations = 0, samples = 0;
  // tiny instances at random nodes
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10; ++i) {
    auto inst = make_tiny_instance(rng);
    QuerySpec hi = inst.spec;
    hi.strategy = Strategy::maximize;
    const auto vmin = solve_backward(inst.spec, inst.grid, *inst.system);
    const auto vmax = solve_backward(hi, inst.grid, *inst.system);
    g_monotone.record(vmin);
    g_monotone.record(vmax);
    for (int k = 0; k < 10; ++k) {
      const std::size_t node = rng() % inst.grid->node_count();
      const JointState z = inst.grid->node_state(node);
      if (inst.system->occupied(z)) continue;
      ++samples;
      if (or_inf(extract_ttl(vmin, z)) > or_inf(extract_ttl(vmax, z))) ++violations;
    }
  }
  // the living-room pedestrian at off-grid states
  QuerySpec lo = leg.config.query, hi = leg.config.query;
  lo.strategy = Strategy::minimize;
  lo.retain_slices = true;
  hi.strategy = Strategy::maximize;
  hi.retain_slices = true;
  const auto vmin = solve_backward(lo, leg.grid, *leg.system);
  const auto vmax = solve_backward(hi, leg.grid, *leg.system);
  g_monotone.record(vmin);
  g_monotone.record(vmax);
  const auto& g = *leg.grid;
  std::uniform_real_distribution<double> ux(g.axis(0).lower, g.axis(0).upper), uy(g.axis(1).lower, g.axis(1).upper),
      ub(0.05, 0.95);
  std::size_t drawn = 0;
  while (drawn < 100) {
    const std::vector<double> x{ux(rng), uy(rng)};
    if (leg.map->occupied_at(x[0], x[1])) continue;
    ++drawn;
    ++samples;
    const JointState z = make_joint_state(x, ub(rng));
    if (or_inf(extract_ttl(vmin, z)) > or_inf(extract_ttl(vmax, z))) ++violations;
  }
  return {violations == 0, fmt("%zu sampled states, %zu violations", samples, violations)};
}

Outcome bayes_batched() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.05, 1.0), prior(0.2, 0.8);
  std::uniform_int_distribution<int> len(1, 30);
  double worst = 0.0;
  int sequences = 0, skipped = 0;
  while (sequences < 1000) {
    const double b0 = prior(rng);
    const int n = len(rng);
    double b = b0, num = b0, den = 1.0 - b0;
    bool clamped = false;
    double err = 0.0;
    for (int k = 0; k < n; ++k) {
      const double l1 = u(rng), l2 = u(rng);
      b = bayes_update(b, l1, l2).belief;
      num *= l1;
      den *= l2;
      const double batched = num / (num + den);
      if (batched < kBeliefFloor || batched > kBeliefCeil) clamped = true;
      err = std::max(err, std::abs(b - batched));
    }
    if (clamped) {
      ++skipped;
      continue;
    }
    ++sequences;
    worst = std::max(worst, err);
  }
  return {worst <= 1e-10, fmt("1000 sequences (%d with active clamping skipped), max error %.2e (tol 1e-10)",
                               skipped, worst)};
}

struct ConfidenceRun {
  TTLReport report;
  ScenarioConfig config;
  std::vector<std::size_t> open, corner;
  double seconds = 0.0;
};

ConfidenceRun confidence_run() {
  ConfidenceRun r;
  const auto t0 = Clock::now();
  r.config = fixture_config("confidence");
  const ScenarioInstance inst = build_scenario(r.config);
  QuerySpec q = r.config.query;
  q.retain_slices = true;
  const ValueSolution sol = solve_backward(q, inst.grid, *inst.system);
  g_monotone.record(sol);
  r.report = ttl_sweep(sol, inst.initial_states(), r.config.priors);
  r.seconds = seconds_since(t0);
  r.open = inst.region_states("open");
  r.corner = inst.region_states("corner");
  return r;
}

Outcome confidence_trend(const ConfidenceRun& r) {
  const auto& rep = r.report;
  std::size_t violations = 0;
  for (std::size_t s = 0; s < rep.states.size(); ++s) {
    for (std::size_t p = 1; p < rep.priors.size(); ++p) {
      if (or_inf(rep.at(s, p)) > or_inf(rep.at(s, p - 1))) ++violations;
    }
  }
  const auto& g = r.config.grid;
  const bool sized = rep.states.size() >= 50 && rep.priors.size() == 8 && g[0].nodes <= 61 && g[1].nodes <= 61 &&
                     g[2].nodes <= 21;
  return {sized && violations == 0 && r.seconds < 300.0,
          fmt("%zu states x %zu priors on %zux%zux%zu nodes, %zu increases, solve + sweep %.1f s (limit 300 s)",
              rep.states.size(), rep.priors.size(), g[0].nodes, g[1].nodes, g[2].nodes, violations, r.seconds)};
}

Outcome spatial_trend(const ConfidenceRun& r) {
  const auto open = r.report.over_states(r.open);
  const auto corner = r.report.over_states(r.corner);
  const bool ok = !r.open.empty() && !r.corner.empty() && open.finite > 0 && corner.finite > 0 &&
                  open.mean < corner.mean;
  return {ok, fmt("open region %zu states mean %.4f s (%zu unreachable), corner %zu states mean %.4f s (%zu "
                  "unreachable)",
                  r.open.size(), open.mean, open.unreachable, r.corner.size(), corner.mean, corner.unreachable)};
}

Outcome legibility(const ScenarioInstance& leg) {
  const auto& c = leg.config;
  BehaviorQuery q;
  q.base = c.query;
  q.goal = c.learner.tracked;
  q.delta = c.legibility_delta;
  q.confidence = c.query.target.threshold;
  const JointState z0 = make_joint_state(c.states.front(), c.priors.front());
  const auto legible = synthesize_behavior(q, BehaviorMode::legible, leg.grid, *leg.system, z0);
  const auto deceptive = synthesize_behavior(q, BehaviorMode::deceptive, leg.grid, *leg.system, z0);
  const auto greedy =
      argmax_q_rollout(*leg.system, TargetSpec::belief_at_least(q.confidence), q.goal, z0, c.query.steps());
  const double l = or_inf(legible.crossing_step), a = or_inf(greedy.crossing_step), d = or_inf(deceptive.crossing_step);
  return {legible.crossing_step.has_value() && l <= a && a <= d,
          fmt("crossing steps legible %g <= argmax-Q %g <= deceptive %g (inf = not within T)", l, a, d)};
}

Outcome gradient_ordering() {
  const ScenarioConfig c = fixture_config("gradient-init");
  const ScenarioInstance inst = build_scenario(c);
  const WeightHeatmap h = reachable_weights(inst.grid, *inst.system, c.states.front(), {0.9, 0.25},
                                            c.forward_steps(), c.query.restriction);
  const double from_high = or_inf(h.arrival_at(0, 0.1)), from_low = or_inf(h.arrival_at(1, 0.1));
  const std::size_t n_high = h.reachable_count(0), n_low = h.reachable_count(1);
  return {from_low < kInf && from_high > from_low && n_low >= n_high,
          fmt("arrival at w*=0.1: from 0.9 %.4f s > from 0.25 %.4f s; reachable cells %zu (w0=0.25) >= %zu "
              "(w0=0.9); %zu order violations reported",
              from_high, from_low, n_low, n_high, h.order_violations())};
}

Outcome contingency() {
  const auto t0 = Clock::now();
  const ScenarioConfig c = fixture_config("driving");
  const ScenarioInstance inst = build_scenario(c);
  const ContingencyBatch batch = run_contingency_batch(inst);
  const double t = seconds_since(t0);
  const auto safe = batch.of(BranchPolicy::safeguard_both);
  const auto ttl = batch.of(BranchPolicy::max_ttl);
  double min_all = kInf;
  for (const auto* x : safe) min_all = std::min(min_all, x->result.metrics.safety);
  for (const auto* x : ttl) min_all = std::min(min_all, x->result.metrics.safety);
  const bool a = min_all > 0.0;
  const double eff_ttl = batch.mean_efficiency(BranchPolicy::max_ttl);
  const double eff_safe = batch.mean_efficiency(BranchPolicy::safeguard_both);
  const bool b = eff_ttl < eff_safe;
  const double ttl_min = batch.min_safety(BranchPolicy::max_ttl);
  double heur_min = kInf;
  for (const auto* x : batch.of(BranchPolicy::heuristic)) {
    if (x->prior_on_true > 0.5) continue;  // incorrect or uniform prior only
    heur_min = std::min(heur_min, x->result.metrics.safety);
  }
  const bool cc = heur_min < ttl_min;
  std::printf("  batch: %zu trials per policy\n", safe.size());
  for (auto p : {BranchPolicy::safeguard_both, BranchPolicy::max_ttl, BranchPolicy::heuristic}) {
    std::printf("  %-15s mean efficiency %.3f m, min safety %.3f m\n", to_string(p).c_str(), batch.mean_efficiency(p),
                batch.min_safety(p));
  }
  return {safe.size() == 18 && a && b && cc && t < 600.0,
          fmt("(a) min safety %.3f m > 0: %s; (b) max-TTL efficiency %.3f < safeguard %.3f: %s; (c) heuristic "
              "incorrect/uniform min safety %.3f < max-TTL min %.3f: %s; %.1f s (limit 600 s)",
              min_all, a ? "yes" : "no", eff_ttl, eff_safe, b ? "yes" : "no", heur_min, ttl_min, cc ? "yes" : "no",
              t)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "learnreach_acceptance";
  fs::remove_all(root);
  const unsigned many = std::max(4u, std::thread::hardware_concurrency());
  std::size_t files = 0, differing = 0;
  for (const char* name : {"confidence", "driving", "gradient-init"}) {
    std::vector<fs::path> dirs;
    for (unsigned threads : {1u, many, 1u}) {
      RunOptions o;
      o.command = Command::scenario;
      o.config = fs::path(LEARNREACH_FIXTURE_DIR) / "scenarios" / (std::string(name) + ".json");
      o.threads = threads;
      o.out = root / (std::string(name) + "_" + std::to_string(dirs.size()));
      std::ostringstream out, err;
      if (run_command(o, out, err) != kExitOk) return {false, std::string(name) + " failed: " + err.str()};
      dirs.push_back(o.out);
    }
    for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
      if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
      const fs::path rel = fs::relative(e.path(), dirs[0]);
      ++files;
      const std::string ref = slurp(e.path());
      if (ref != slurp(dirs[1] / rel) || ref != slurp(dirs[2] / rel)) ++differing;
    }
  }
  fs::remove_all(root);
  return {files > 0 && differing == 0,
          fmt("%zu CSV files compared across 1, %u and 1 threads, %zu differ", files, many, differing)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* title, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
    std::fflush(stdout);
  };

  const ScenarioInstance leg = build_scenario(fixture_config("legibility"));
  report(1, "brute-force oracle equivalence", oracle_equivalence);
  report(3, "best-case TTL <= worst-case TTL", [&] { return best_not_after_worst(leg); });
  report(4, "sequential Bayes equals batched posterior", bayes_batched);
  std::optional<ConfidenceRun> conf;
  try {
    conf = confidence_run();
  } catch (const std::exception& e) {
    std::printf("confidence run failed: %s\n", e.what());
  }
  report(5, "confidence TTL non-increasing in the prior", [&] {
    return conf ? confidence_trend(*conf) : Outcome{false, "confidence run failed"};
  });
  report(6, "open region learns faster than the corner", [&] {
    return conf ? spatial_trend(*conf) : Outcome{false, "confidence run failed"};
  });
  report(7, "legible <= argmax-Q <= deceptive", [&] { return legibility(leg); });
  report(8, "gradient initialization ordering", gradient_ordering);
  report(9, "contingency orderings", contingency);
  report(10, "byte-identical CSVs across thread counts", determinism);
  report(2, "value monotonicity in time", [] {
    return Outcome{g_monotone.violations == 0 && g_monotone.solves > 0,
                   fmt("%zu solves checked, %zu violations", g_monotone.solves, g_monotone.violations)};
  });
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
