#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "learnreach/errors.hpp"
#include "learnreach/scenarios.hpp"

using namespace learnreach;
namespace fs = std::filesystem;

namespace {

const ScenarioInstance& driving() {
  static const ScenarioInstance inst = build_scenario(*find_scenario("driving"));
  return inst;
}

ContingencySimConfig sim_config(double prior, std::size_t goal, std::uint64_t seed, std::size_t branch) {
  const auto& c = driving().config;
  ContingencySimConfig s = c.sim;
  s.human_start = c.sim_human_starts.front();
  s.prior = prior;
  s.true_goal = goal;
  s.seed = seed;
  s.branch_step = branch;
  return s;
}

std::string expect_config_error(const nlohmann::json& j) {
  try {
    scenario_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("catalog holds the four case studies") {
  const auto cat = scenario_catalog();
  REQUIRE(cat.size() == 4);
  std::set<std::string> names;
  for (const auto& c : cat) names.insert(c.name);
  CHECK(names == std::set<std::string>{"driving", "confidence", "legibility", "gradient-init"});

  const auto drv = *find_scenario("driving");
  CHECK(drv.human.dt == 0.0891);
  CHECK(drv.query.horizon == doctest::Approx(1.7820));
  CHECK(drv.human.speed == 6.0);
  CHECK(drv.confidence == 0.9);
  CHECK(drv.branch_delta == 0.27);
  CHECK(drv.query.strategy == Strategy::maximize);
  CHECK(drv.heuristic_branch_time == 0.3265);

  const auto conf = *find_scenario("confidence");
  CHECK(conf.human.dt == 0.4545);
  CHECK(conf.human.speed == 0.6);
  CHECK(conf.query.target.threshold == 0.9);
  REQUIRE(conf.human.intents.size() == 2);
  CHECK(conf.human.intents[0].beta == 0.0);
  CHECK(conf.human.intents[1].beta == 1.0);
  CHECK(conf.priors.size() == 8);

  const auto leg = *find_scenario("legibility");
  CHECK(leg.legibility_delta == 0.15);

  const auto grad = *find_scenario("gradient-init");
  CHECK(grad.human.dt == 0.2469);
  CHECK(grad.learner.kind == LearnerKind::gradient);
  CHECK(std::abs(grad.query.horizon - 7.1605) < grad.human.dt);

  CHECK_FALSE(find_scenario("nope").has_value());
}

TEST_CASE("every catalog config validates and round-trips through json") {
  for (const auto& c : scenario_catalog()) {
    CAPTURE(c.name);
    CHECK_NOTHROW(c.validate());
    const auto j = to_json(c);
    const auto back = scenario_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(scenario_from_json(nlohmann::json::parse(j.dump())).name == c.name);
  }
}

TEST_CASE("fixture configs match the catalog") {
  for (const auto& c : scenario_catalog()) {
    CAPTURE(c.name);
    const auto loaded = load_scenario_config(fs::path(LEARNREACH_FIXTURE_DIR) / "scenarios" / (c.name + ".json"));
    CHECK(to_json(loaded) == to_json(c));
  }
}

TEST_CASE("config errors name the offending field") {
  const auto base = to_json(*find_scenario("confidence"));

  auto j = base;
  j["bogus"] = 1;
  CHECK(expect_config_error(j) == "bogus");

  j = base;
  j["human"]["speed"] = "fast";
  CHECK(expect_config_error(j) == "human.speed");

  j = base;
  j.erase("query");
  CHECK(expect_config_error(j) == "query");

  j = base;
  j["query"]["horizon"] = 1.0;
  CHECK(expect_config_error(j) == "query.horizon");

  j = base;
  j["query"]["dt"] = 0.5;
  CHECK(expect_config_error(j) == "query.dt");

  j = base;
  j["grid"][1]["nodes"] = 1;
  CHECK(expect_config_error(j) == "grid[1].nodes");

  j = base;
  j["states"] = {{50.0, 1.0}};
  CHECK(expect_config_error(j) == "states[0]");

  j = base;
  j["priors"][2] = 1.5;
  CHECK(expect_config_error(j) == "priors[2]");

  j = base;
  j["kind"] = "racing";
  CHECK(expect_config_error(j) == "kind");

  j = base;
  j["human"]["intents"][0]["weights"]["speed"] = 1.0;
  CHECK(expect_config_error(j) == "human.intents[0].weights.speed");

  auto d = to_json(*find_scenario("driving"));
  d["sim"]["branch_step"] = 31;
  CHECK(expect_config_error(d) == "sim.branch_step");

  CHECK_THROWS_AS(load_scenario_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("initial states skip occupied lattice points") {
  const auto c = *find_scenario("confidence");
  const ScenarioInstance inst = build_scenario(c);
  const auto states = inst.initial_states();
  CHECK(states.size() >= 50);
  CHECK(states.size() <= 121);
  for (const auto& s : states) CHECK_FALSE(inst.map->occupied_at(s[0], s[1]));
  const auto open = inst.region_states("open");
  const auto corner = inst.region_states("corner");
  CHECK(!open.empty());
  CHECK(!corner.empty());
  for (auto i : open) CHECK(c.regions[0].contains(states[i][0], states[i][1]));
}

TEST_CASE("route geometry") {
  const Route r({4.0, -14.0}, {{4.0, 4.0}}, {-22.0, 4.0}, 4.0);
  const double arc = 0.5 * M_PI * 4.0;
  CHECK(r.length() == doctest::Approx(14.0 + arc + 22.0));
  const auto start = r.pose(0.0);
  CHECK(start[0] == doctest::Approx(4.0));
  CHECK(start[1] == doctest::Approx(-14.0));
  CHECK(start[2] == doctest::Approx(M_PI / 2));
  const auto end = r.pose(r.length() + 5.0);
  CHECK(end[0] == doctest::Approx(-22.0));
  CHECK(end[1] == doctest::Approx(4.0));
  CHECK(std::abs(std::remainder(end[2] - M_PI, 2 * M_PI)) < 1e-9);
  // continuity across the fillet
  for (double s = 0.0; s < r.length(); s += 0.25) {
    const auto a = r.pose(s), b = r.pose(s + 0.01);
    CHECK(std::hypot(b[0] - a[0], b[1] - a[1]) == doctest::Approx(0.01).epsilon(1e-3));
  }
}

TEST_CASE("contingency simulation is deterministic per seed") {
  const auto& inst = driving();
  const auto a = run_contingency_sim(sim_config(0.5, 1, 7, 4), *inst.human);
  const auto b = run_contingency_sim(sim_config(0.5, 1, 7, 4), *inst.human);
  REQUIRE(a.trace.size() == b.trace.size());
  CHECK(a.metrics.efficiency == b.metrics.efficiency);
  CHECK(a.metrics.safety == b.metrics.safety);
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].human == b.trace[k].human);
    CHECK(a.trace[k].plan == b.trace[k].plan);
  }
}

TEST_CASE("simulated belief replays through the Bayes update") {
  const auto& inst = driving();
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto r = run_contingency_sim(sim_config(0.1, seed % 2, seed, 30), *inst.human);
    REQUIRE(r.trace.size() == 31);
    for (std::size_t k = 0; k + 1 < r.trace.size(); ++k) {
      const auto& s = r.trace[k];
      const double b = bayes_update(s.belief, *inst.human, s.human, s.human_action, 0, 1).belief;
      CHECK(std::abs(b - r.trace[k + 1].belief) <= 1e-10);
    }
  }
}

TEST_CASE("simulation metrics and trace") {
  const auto& inst = driving();
  const auto cfg = sim_config(0.9, 0, 3, 30);
  const auto r = run_contingency_sim(cfg, *inst.human);
  const auto& first = r.trace.front();
  const double initial = std::hypot(first.robot[0] - first.human[0], first.robot[1] - first.human[1]) -
                         2.0 * cfg.car_radius;
  CHECK(r.metrics.safety <= initial);
  const auto& last = r.trace.back();
  CHECK(r.metrics.efficiency ==
        doctest::Approx(std::hypot(last.robot[0] - cfg.robot_goal[0], last.robot[1] - cfg.robot_goal[1])));
  for (const auto& s : r.trace) CHECK(s.plan < cfg.library_size());
}

TEST_CASE("plans through static obstacles are never chosen") {
  const auto& inst = driving();
  auto cfg = sim_config(0.5, 0, 0, 30);
  // a route that leaves the lane sideways into the shoulder
  cfg.robot_corners.clear();
  cfg.robot_goal = {30.0, -14.0};
  cfg.robot_start = {4.0, -14.0, 0.0};
  cfg.robot_speed = 1.0;
  const auto r = run_contingency_sim(cfg, *inst.human);
  CHECK(r.rejected_plans > 0);
  for (const auto& s : r.trace) CHECK_FALSE(inst.map->occupied_at(s.robot[0], s.robot[1]));
}

TEST_CASE("sim config validation") {
  auto cfg = sim_config(0.5, 0, 0, 30);
  CHECK_NOTHROW(cfg.validate());
  cfg.branch_step = 31;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "sim.branch_step");
  }
  cfg.branch_step = 0;
  cfg.accelerations.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(sim_config(0.5, 0, 0, 30).library_size() == 196);
}

TEST_CASE("contingency batch layout") {
  const auto batch = run_contingency_batch(driving(), 1);
  const auto& c = driving().config;
  const std::size_t per_policy = c.sim_human_starts.size() * 2 * c.sim_priors.size();
  CHECK(per_policy == 18);
  CHECK(batch.trials.size() == 3 * per_policy);
  for (auto p : {BranchPolicy::safeguard_both, BranchPolicy::max_ttl, BranchPolicy::heuristic}) {
    const auto trials = batch.of(p);
    REQUIRE(trials.size() == per_policy);
    for (const auto* t : trials) {
      CHECK(t->branch_step <= c.sim.horizon_steps);
      if (p == BranchPolicy::safeguard_both) CHECK(t->branch_step == c.sim.horizon_steps);
      if (p == BranchPolicy::heuristic) CHECK(t->branch_step == 4);
      if (p == BranchPolicy::max_ttl) {
        const auto steps = t->branch.steps();
        CHECK(t->branch_step == (steps ? *steps : c.sim.horizon_steps));
      }
    }
  }
  // trials with the same index share the human's random stream
  const auto a = batch.of(BranchPolicy::safeguard_both);
  const auto b = batch.of(BranchPolicy::max_ttl);
  CHECK(a[0]->result.trace[0].human_action == b[0]->result.trace[0].human_action);
}
