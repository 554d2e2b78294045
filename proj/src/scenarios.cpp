#include "learnreach/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>

#include "learnreach/errors.hpp"
#include "learnreach/parallel.hpp"

#ifndef LEARNREACH_FIXTURE_DIR
#define LEARNREACH_FIXTURE_DIR ""
#endif

namespace learnreach {

using nlohmann::json;

namespace {

constexpr double kHalfPi = 1.5707963267948966;

// Typed access into a JSON object that reports failures by key path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const std::string& key) const { return j_.at(key); }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "wrong type");
    }
  }

  template <class T>
  void require(const std::string& key, T& out) const {
    if (!has(key)) throw ConfigError(field(key), "missing");
    get(key, out);
  }

  Reader child(const std::string& key) const { return Reader(j_.at(key), field(key)); }

  void only(std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.count(k)) throw ConfigError(field(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
};

std::string indexed(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

template <class E>
E enum_from(const std::string& field, const std::string& s,
            std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [n, e] : names) {
    if (s == n) return e;
  }
  throw ConfigError(field, "unknown value \"" + s + "\"");
}

template <class E>
std::string enum_name(E e, std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [n, v] : names) {
    if (v == e) return n;
  }
  return "?";
}

const std::initializer_list<std::pair<const char*, HumanKind>> kHumanKinds{
    {"pedestrian2d", HumanKind::pedestrian2d}, {"dubins3d", HumanKind::dubins3d}};
const std::initializer_list<std::pair<const char*, LearnerKind>> kLearnerKinds{
    {"bayes", LearnerKind::bayes}, {"gradient", LearnerKind::gradient}};
const std::initializer_list<std::pair<const char*, TargetKind>> kTargetKinds{
    {"belief_at_least", TargetKind::belief_at_least},
    {"belief_at_most", TargetKind::belief_at_most},
    {"estimate_near", TargetKind::estimate_near}};
const std::initializer_list<std::pair<const char*, Strategy>> kStrategies{{"minimize", Strategy::minimize},
                                                                          {"maximize", Strategy::maximize}};
const std::initializer_list<std::pair<const char*, Interpolation>> kInterpolations{
    {"multilinear", Interpolation::multilinear}, {"nearest", Interpolation::nearest}};
const std::initializer_list<std::pair<const char*, ScenarioKind>> kScenarioKinds{
    {"driving", ScenarioKind::driving},
    {"confidence", ScenarioKind::confidence},
    {"legibility", ScenarioKind::legibility},
    {"gradient-init", ScenarioKind::gradient_init}};

template <class E>
E read_enum(const Reader& r, const std::string& key, E fallback,
            std::initializer_list<std::pair<const char*, E>> names) {
  if (!r.has(key)) return fallback;
  std::string s;
  r.get(key, s);
  return enum_from(r.field(key), s, names);
}

json intent_json(const Intent& in) {
  return {{"name", in.name},
          {"goal", in.goal},
          {"weights", {{"goal", in.weights.goal}, {"obstacle", in.weights.obstacle}}},
          {"beta", in.beta}};
}

Intent intent_from(const Reader& r) {
  r.only({"name", "goal", "weights", "beta"});
  Intent in;
  r.get("name", in.name);
  r.require("goal", in.goal);
  r.get("beta", in.beta);
  if (r.has("weights")) {
    const Reader w = r.child("weights");
    w.only({"goal", "obstacle"});
    w.get("goal", in.weights.goal);
    w.get("obstacle", in.weights.obstacle);
  }
  return in;
}

json sim_json(const ContingencySimConfig& s) {
  json corners = json::array();
  for (const auto& c : s.robot_corners) corners.push_back(c);
  return {{"dt", s.dt},
          {"horizon_steps", s.horizon_steps},
          {"branch_step", s.branch_step},
          {"robot_start", s.robot_start},
          {"robot_corners", corners},
          {"robot_goal", s.robot_goal},
          {"turn_radius", s.turn_radius},
          {"robot_speed", s.robot_speed},
          {"robot_max_speed", s.robot_max_speed},
          {"accelerations", s.accelerations},
          {"w_goal", s.w_goal},
          {"w_collision", s.w_collision},
          {"w_smooth", s.w_smooth},
          {"safe_distance", s.safe_distance},
          {"car_radius", s.car_radius},
          {"human_start", s.human_start},
          {"true_goal", s.true_goal},
          {"prior", s.prior},
          {"seed", s.seed}};
}

ContingencySimConfig sim_from(const Reader& r) {
  r.only({"dt", "horizon_steps", "branch_step", "robot_start", "robot_corners", "robot_goal", "turn_radius",
          "robot_speed", "robot_max_speed", "accelerations", "w_goal", "w_collision", "w_smooth", "safe_distance",
          "car_radius", "human_start", "true_goal", "prior", "seed"});
  ContingencySimConfig s;
  r.get("dt", s.dt);
  r.get("horizon_steps", s.horizon_steps);
  r.get("branch_step", s.branch_step);
  r.get("robot_start", s.robot_start);
  r.get("robot_corners", s.robot_corners);
  r.get("robot_goal", s.robot_goal);
  r.get("turn_radius", s.turn_radius);
  r.get("robot_speed", s.robot_speed);
  r.get("robot_max_speed", s.robot_max_speed);
  r.get("accelerations", s.accelerations);
  r.get("w_goal", s.w_goal);
  r.get("w_collision", s.w_collision);
  r.get("w_smooth", s.w_smooth);
  r.get("safe_distance", s.safe_distance);
  r.get("car_radius", s.car_radius);
  r.get("human_start", s.human_start);
  r.get("true_goal", s.true_goal);
  r.get("prior", s.prior);
  r.get("seed", s.seed);
  return s;
}

double axis_value(const std::array<double, 3>& spec, std::size_t i) {
  const auto n = static_cast<std::size_t>(spec[2]);
  if (n <= 1) return spec[0];
  return spec[0] + (spec[1] - spec[0]) * static_cast<double>(i) / static_cast<double>(n - 1);
}

bool within(const Axis& a, double v) {
  if (a.periodic) return true;
  const double tol = 1e-9 * std::max(1.0, std::abs(a.upper - a.lower));
  return v >= a.lower - tol && v <= a.upper + tol;
}

}  // namespace

std::string to_string(ScenarioKind k) { return enum_name(k, kScenarioKinds); }

ScenarioKind scenario_kind_from_string(const std::string& s) { return enum_from("kind", s, kScenarioKinds); }

std::size_t ScenarioConfig::forward_steps() const {
  return static_cast<std::size_t>(std::lround(query.horizon / human.dt));
}

nlohmann::json to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["kind"] = to_string(c.kind);
  j["map"] = c.map;
  json intents = json::array();
  for (const auto& in : c.human.intents) intents.push_back(intent_json(in));
  j["human"] = {{"kind", enum_name(c.human.kind, kHumanKinds)},
                {"speed", c.human.speed},
                {"dt", c.human.dt},
                {"headings", c.human.headings},
                {"stop", c.human.stop},
                {"turn_rates", c.human.turn_rates},
                {"discount", c.human.discount},
                {"clearance_cap", c.human.clearance_cap},
                {"reward_scale", c.human.reward_scale},
                {"q_lookahead", c.human.q_lookahead},
                {"heading_bins", c.human.heading_bins},
                {"intents", intents}};
  j["learner"] = {{"kind", enum_name(c.learner.kind, kLearnerKinds)},
                  {"tracked", c.learner.tracked},
                  {"other", c.learner.other},
                  {"learning_rate", c.learner.learning_rate},
                  {"weight_nodes", c.learner.weight_nodes}};
  json grid = json::array();
  for (const auto& a : c.grid) {
    grid.push_back({{"lower", a.lower}, {"upper", a.upper}, {"nodes", a.nodes}, {"periodic", a.periodic}});
  }
  j["grid"] = grid;
  const auto& q = c.query;
  // Thread count is a run-time choice and stays out of the echoed config.
  j["query"] = {{"target",
                 {{"kind", enum_name(q.target.kind, kTargetKinds)},
                  {"threshold", q.target.threshold},
                  {"center", q.target.center},
                  {"epsilon", q.target.epsilon}}},
                {"strategy", enum_name(q.strategy, kStrategies)},
                {"horizon", q.horizon},
                {"dt", q.dt},
                {"restriction",
                 {{"active", q.restriction.active}, {"intent", q.restriction.intent}, {"delta", q.restriction.delta}}},
                {"interpolation", enum_name(q.interpolation, kInterpolations)},
                {"retain_slices", q.retain_slices}};
  j["states"] = c.states;
  if (c.lattice) j["lattice"] = {{"x", c.lattice->x}, {"y", c.lattice->y}, {"extra", c.lattice->extra}};
  j["priors"] = c.priors;
  json regions = json::array();
  for (const auto& r : c.regions) regions.push_back({{"name", r.name}, {"box", r.box}});
  j["regions"] = regions;
  switch (c.kind) {
    case ScenarioKind::legibility:
      j["legibility_delta"] = c.legibility_delta;
      break;
    case ScenarioKind::driving: {
      j["branch_delta"] = c.branch_delta;
      j["confidence"] = c.confidence;
      j["heuristic_branch_time"] = c.heuristic_branch_time;
      j["sim_priors"] = c.sim_priors;
      j["sim"] = sim_json(c.sim);
      json starts = json::array();
      for (const auto& s : c.sim_human_starts) starts.push_back(s);
      j["sim_human_starts"] = starts;
      break;
    }
    case ScenarioKind::gradient_init:
      j["initial_weights"] = c.initial_weights;
      j["target_weight"] = c.target_weight;
      break;
    case ScenarioKind::confidence:
      break;
  }
  return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  const Reader r(j, "");
  r.only({"name", "kind", "map", "human", "learner", "grid", "query", "states", "lattice", "priors", "regions",
          "legibility_delta", "branch_delta", "confidence", "heuristic_branch_time", "sim_priors", "sim",
          "sim_human_starts", "initial_weights", "target_weight"});
  ScenarioConfig c;
  r.require("name", c.name);
  c.kind = read_enum(r, "kind", c.kind, kScenarioKinds);
  r.require("map", c.map);

  if (!r.has("human")) throw ConfigError("human", "missing");
  {
    const Reader h = r.child("human");
    h.only({"kind", "speed", "dt", "headings", "stop", "turn_rates", "discount", "clearance_cap", "reward_scale",
            "q_lookahead", "heading_bins", "intents"});
    auto& hc = c.human;
    hc.kind = read_enum(h, "kind", hc.kind, kHumanKinds);
    h.get("speed", hc.speed);
    h.get("dt", hc.dt);
    h.get("headings", hc.headings);
    h.get("stop", hc.stop);
    h.get("turn_rates", hc.turn_rates);
    h.get("discount", hc.discount);
    h.get("clearance_cap", hc.clearance_cap);
    h.get("reward_scale", hc.reward_scale);
    h.get("q_lookahead", hc.q_lookahead);
    h.get("heading_bins", hc.heading_bins);
    if (!h.has("intents")) throw ConfigError("human.intents", "missing");
    if (!h.at("intents").is_array()) throw ConfigError("human.intents", "expected an array");
    for (std::size_t i = 0; i < h.at("intents").size(); ++i) {
      hc.intents.push_back(intent_from(Reader(h.at("intents")[i], indexed("human.intents", i))));
    }
  }

  if (r.has("learner")) {
    const Reader l = r.child("learner");
    l.only({"kind", "tracked", "other", "learning_rate", "weight_nodes"});
    c.learner.kind = read_enum(l, "kind", c.learner.kind, kLearnerKinds);
    l.get("tracked", c.learner.tracked);
    l.get("other", c.learner.other);
    l.get("learning_rate", c.learner.learning_rate);
    l.get("weight_nodes", c.learner.weight_nodes);
  }

  if (!r.has("grid")) throw ConfigError("grid", "missing");
  if (!r.at("grid").is_array()) throw ConfigError("grid", "expected an array");
  for (std::size_t i = 0; i < r.at("grid").size(); ++i) {
    const Reader a(r.at("grid")[i], indexed("grid", i));
    a.only({"lower", "upper", "nodes", "periodic"});
    Axis ax;
    a.require("lower", ax.lower);
    a.require("upper", ax.upper);
    a.require("nodes", ax.nodes);
    a.get("periodic", ax.periodic);
    c.grid.push_back(ax);
  }

  if (!r.has("query")) throw ConfigError("query", "missing");
  {
    const Reader q = r.child("query");
    q.only({"target", "strategy", "horizon", "dt", "restriction", "interpolation", "retain_slices"});
    if (q.has("target")) {
      const Reader t = q.child("target");
      t.only({"kind", "threshold", "center", "epsilon"});
      c.query.target.kind = read_enum(t, "kind", c.query.target.kind, kTargetKinds);
      t.get("threshold", c.query.target.threshold);
      t.get("center", c.query.target.center);
      t.get("epsilon", c.query.target.epsilon);
    }
    c.query.strategy = read_enum(q, "strategy", c.query.strategy, kStrategies);
    q.require("horizon", c.query.horizon);
    c.query.dt = c.human.dt;
    q.get("dt", c.query.dt);
    if (q.has("restriction")) {
      const Reader x = q.child("restriction");
      x.only({"active", "intent", "delta"});
      x.get("active", c.query.restriction.active);
      x.get("intent", c.query.restriction.intent);
      x.get("delta", c.query.restriction.delta);
    }
    c.query.interpolation = read_enum(q, "interpolation", c.query.interpolation, kInterpolations);
    q.get("retain_slices", c.query.retain_slices);
  }

  r.get("states", c.states);
  if (r.has("lattice")) {
    const Reader l = r.child("lattice");
    l.only({"x", "y", "extra"});
    StateLattice lat;
    l.require("x", lat.x);
    l.require("y", lat.y);
    l.get("extra", lat.extra);
    c.lattice = lat;
  }
  r.get("priors", c.priors);
  if (r.has("regions")) {
    if (!r.at("regions").is_array()) throw ConfigError("regions", "expected an array");
    for (std::size_t i = 0; i < r.at("regions").size(); ++i) {
      const Reader g(r.at("regions")[i], indexed("regions", i));
      g.only({"name", "box"});
      Region reg;
      g.require("name", reg.name);
      g.require("box", reg.box);
      c.regions.push_back(reg);
    }
  }
  r.get("legibility_delta", c.legibility_delta);
  r.get("branch_delta", c.branch_delta);
  r.get("confidence", c.confidence);
  r.get("heuristic_branch_time", c.heuristic_branch_time);
  r.get("sim_priors", c.sim_priors);
  if (r.has("sim")) c.sim = sim_from(r.child("sim"));
  r.get("sim_human_starts", c.sim_human_starts);
  r.get("initial_weights", c.initial_weights);
  r.get("target_weight", c.target_weight);
  c.validate();
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

HumanModelSpec make_human_spec(const ScenarioConfig& c, std::vector<double>* weight_nodes) {
  const HumanConfig& h = c.human;
  HumanModelSpec s;
  s.kind = h.kind;
  s.speed = h.speed;
  s.dt = h.dt;
  s.actions = h.kind == HumanKind::pedestrian2d ? HumanModelSpec::pedestrian_actions(h.speed, h.headings, h.stop)
                                                : HumanModelSpec::dubins_actions(h.speed, h.turn_rates);
  s.discount = h.discount;
  s.clearance_cap = h.clearance_cap;
  s.reward_scale = h.reward_scale;
  s.q_lookahead = h.q_lookahead;
  s.heading_bins = h.heading_bins;
  if (c.learner.kind == LearnerKind::gradient) {
    if (h.intents.empty()) throw ConfigError("human.intents", "gradient learner needs a template intent");
    if (c.learner.weight_nodes < 2) throw ConfigError("learner.weight_nodes", "need at least two weight nodes");
    std::vector<double> nodes;
    for (std::size_t i = 0; i < c.learner.weight_nodes; ++i) {
      const double w = static_cast<double>(i) / static_cast<double>(c.learner.weight_nodes - 1);
      nodes.push_back(w);
      Intent in = h.intents.front();
      in.name = "w" + std::to_string(i);
      in.weights = {1.0 - w, w};
      s.intents.push_back(in);
    }
    if (weight_nodes) *weight_nodes = nodes;
  } else {
    s.intents = h.intents;
  }
  return s;
}

void ScenarioConfig::validate() const {
  if (name.empty()) throw ConfigError("name", "must be nonempty");
  if (map.empty()) throw ConfigError("map", "must be nonempty");
  const HumanModelSpec spec = make_human_spec(*this);
  spec.validate();
  const std::size_t pd = spec.physical_dims();
  if (learner.kind == LearnerKind::bayes) {
    if (spec.intents.size() < 2) throw ConfigError("human.intents", "belief learner needs at least two intents");
    if (learner.tracked >= spec.intents.size()) throw ConfigError("learner.tracked", "intent index out of range");
    if (learner.other >= spec.intents.size() || learner.other == learner.tracked) {
      throw ConfigError("learner.other", "must be a different valid intent index");
    }
  } else if (!(learner.learning_rate > 0.0)) {
    throw ConfigError("learner.learning_rate", "must be > 0");
  }

  if (grid.size() != pd + 1) {
    throw ConfigError("grid", "expected " + std::to_string(pd + 1) + " axes (physical plus estimate)");
  }
  for (std::size_t d = 0; d < grid.size(); ++d) {
    if (grid[d].nodes < 2) throw ConfigError(indexed("grid", d) + ".nodes", "must be >= 2");
    if (!(grid[d].upper > grid[d].lower)) throw ConfigError(indexed("grid", d) + ".upper", "must exceed lower");
  }
  if (grid[pd].periodic) throw ConfigError(indexed("grid", pd) + ".periodic", "estimate axis cannot be periodic");

  if (!(query.dt > 0.0)) throw ConfigError("query.dt", "must be > 0");
  if (std::abs(query.dt - human.dt) > 1e-9) throw ConfigError("query.dt", "must equal human.dt");
  if (!(query.horizon >= 0.0)) throw ConfigError("query.horizon", "must be >= 0");
  const double ratio = query.horizon / query.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6) throw ConfigError("query.horizon", "must be a multiple of dt");
  if (query.restriction.active) {
    if (query.restriction.intent >= spec.intents.size()) {
      throw ConfigError("query.restriction.intent", "intent index out of range");
    }
    if (!(query.restriction.delta >= 0.0 && query.restriction.delta <= 1.0)) {
      throw ConfigError("query.restriction.delta", "must lie in [0, 1]");
    }
  }

  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].size() != pd) throw ConfigError(indexed("states", i), "wrong dimension");
    for (std::size_t d = 0; d < pd; ++d) {
      if (!within(grid[d], states[i][d])) throw ConfigError(indexed("states", i), "outside the grid bounds");
    }
  }
  if (lattice) {
    const std::array<const std::array<double, 3>*, 2> ax{&lattice->x, &lattice->y};
    for (std::size_t d = 0; d < 2; ++d) {
      const std::string f = d == 0 ? "lattice.x" : "lattice.y";
      const auto& a = *ax[d];
      if (!(a[2] >= 1.0) || a[2] != std::floor(a[2])) throw ConfigError(f, "count must be a positive integer");
      if (!within(grid[d], a[0]) || !within(grid[d], a[1])) throw ConfigError(f, "outside the grid bounds");
    }
    if (lattice->extra.size() + 2 != pd) throw ConfigError("lattice.extra", "wrong dimension");
    for (std::size_t d = 2; d < pd; ++d) {
      if (!within(grid[d], lattice->extra[d - 2])) throw ConfigError("lattice.extra", "outside the grid bounds");
    }
  }
  for (std::size_t i = 0; i < priors.size(); ++i) {
    if (!(priors[i] >= 0.0 && priors[i] <= 1.0) || !within(grid[pd], priors[i])) {
      throw ConfigError(indexed("priors", i), "must lie in [0, 1] and inside the estimate axis");
    }
  }
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& b = regions[i].box;
    if (regions[i].name.empty()) throw ConfigError(indexed("regions", i) + ".name", "must be nonempty");
    if (!(b[1] >= b[0] && b[3] >= b[2])) throw ConfigError(indexed("regions", i) + ".box", "empty box");
  }

  if (kind == ScenarioKind::legibility && !(legibility_delta >= 0.0 && legibility_delta <= 1.0)) {
    throw ConfigError("legibility_delta", "must lie in [0, 1]");
  }
  if (kind == ScenarioKind::driving) {
    if (spec.intents.size() != 2) throw ConfigError("human.intents", "driving needs exactly two intents");
    if (pd != 3) throw ConfigError("human.kind", "driving needs the dubins3d model");
    if (!(branch_delta >= 0.0 && branch_delta <= 1.0)) throw ConfigError("branch_delta", "must lie in [0, 1]");
    if (!(confidence > 0.5 && confidence < 1.0)) throw ConfigError("confidence", "must lie in (0.5, 1)");
    if (!(heuristic_branch_time >= 0.0)) throw ConfigError("heuristic_branch_time", "must be >= 0");
    for (std::size_t i = 0; i < sim_priors.size(); ++i) {
      if (!(sim_priors[i] >= 0.0 && sim_priors[i] <= 1.0)) {
        throw ConfigError(indexed("sim_priors", i), "must lie in [0, 1]");
      }
    }
    sim.validate();
    if (std::abs(sim.dt - human.dt) > 1e-9) throw ConfigError("sim.dt", "must equal human.dt");
    for (std::size_t i = 0; i < sim_human_starts.size(); ++i) {
      for (std::size_t d = 0; d < 3; ++d) {
        if (!within(grid[d], sim_human_starts[i][d])) {
          throw ConfigError(indexed("sim_human_starts", i), "outside the grid bounds");
        }
      }
    }
  }
  if (kind == ScenarioKind::gradient_init) {
    if (learner.kind != LearnerKind::gradient) throw ConfigError("learner.kind", "gradient-init needs the gradient learner");
    for (std::size_t i = 0; i < initial_weights.size(); ++i) {
      if (!(initial_weights[i] >= 0.0 && initial_weights[i] <= 1.0)) {
        throw ConfigError(indexed("initial_weights", i), "must lie in [0, 1]");
      }
    }
    if (!(target_weight >= 0.0 && target_weight <= 1.0)) throw ConfigError("target_weight", "must lie in [0, 1]");
    if (states.empty()) throw ConfigError("states", "gradient-init needs a start state");
  }
}

std::vector<ScenarioConfig> scenario_catalog() {
  std::vector<ScenarioConfig> out;

  {
    // Dubins driver approaching a four-way intersection; goals straight
    // through or a left turn. The robot turns left across both.
    ScenarioConfig c;
    c.name = "driving";
    c.kind = ScenarioKind::driving;
    c.map = "intersection";
    auto& h = c.human;
    h.kind = HumanKind::dubins3d;
    h.speed = 6.0;
    h.dt = 0.0891;
    h.turn_rates = {-3.5, 0.0, 3.5};
    h.clearance_cap = 4.0;
    h.reward_scale = 10.0;
    h.q_lookahead = 4;
    h.heading_bins = 24;
    h.intents = {{"straight", {-4.0, -22.0}, {1.0, 0.0}, 1.0}, {"left", {22.0, -4.0}, {1.0, 0.0}, 1.0}};
    c.learner = {LearnerKind::bayes, 0, 1, 0.1, 21};
    c.grid = {{-8.0, 8.0, 17, false}, {-12.0, 20.0, 33, false}, {-kPi, kPi, 24, true}, {0.0, 1.0, 21, false}};
    c.query.target = TargetSpec::belief_at_least(0.9);
    c.query.strategy = Strategy::maximize;
    c.query.horizon = 1.7820;
    c.query.dt = h.dt;
    c.query.restriction = ControlRestriction::likely_under(0, 0.27);
    c.states = {{-4.0, 10.0, -kHalfPi}};
    c.priors = {0.1, 0.5, 0.9};
    c.branch_delta = 0.27;
    c.confidence = 0.9;
    c.heuristic_branch_time = 0.3265;
    c.sim_priors = {0.9, 0.1, 0.5};
    c.sim.dt = h.dt;
    c.sim_human_starts = {{-4.0, 14.0, -kHalfPi}, {-4.0, 16.0, -kHalfPi}, {-3.0, 12.0, -kHalfPi}};
    out.push_back(c);
  }
  {
    // Bookstore pedestrian; does the predictor notice that its reward
    // model does not explain the human (beta = 0)?
    ScenarioConfig c;
    c.name = "confidence";
    c.kind = ScenarioKind::confidence;
    c.map = "bookstore";
    auto& h = c.human;
    h.kind = HumanKind::pedestrian2d;
    h.speed = 0.6;
    h.dt = 0.4545;
    h.reward_scale = 6.0;
    h.intents = {{"beta0", {3.0, 17.0}, {1.0, 0.0}, 0.0}, {"beta1", {3.0, 17.0}, {1.0, 0.0}, 1.0}};
    c.learner = {LearnerKind::bayes, 0, 1, 0.1, 21};
    c.grid = {{0.0, 20.0, 61, false}, {0.0, 20.0, 61, false}, {0.0, 1.0, 21, false}};
    c.query.target = TargetSpec::belief_at_least(0.9);
    c.query.strategy = Strategy::minimize;
    c.query.horizon = 30 * h.dt;
    c.query.dt = h.dt;
    c.lattice = StateLattice{{1.0, 19.0, 11.0}, {1.0, 19.0, 11.0}, {}};
    c.priors = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    c.regions = {{"open", {1.0, 7.0, 12.0, 19.0}}, {"corner", {13.0, 19.5, 0.5, 6.8}}};
    out.push_back(c);
  }
  {
    // Living room with two candidate goals on either side of the couch.
    ScenarioConfig c;
    c.name = "legibility";
    c.kind = ScenarioKind::legibility;
    c.map = "living_room";
    auto& h = c.human;
    h.kind = HumanKind::pedestrian2d;
    h.speed = 0.6;
    h.dt = 0.4545;
    h.reward_scale = 6.0;
    h.intents = {{"g1", {2.6, 10.6}, {1.0, 0.0}, 1.0}, {"g2", {9.4, 10.6}, {1.0, 0.0}, 1.0}};
    c.learner = {LearnerKind::bayes, 0, 1, 0.1, 21};
    c.grid = {{0.0, 12.0, 61, false}, {0.0, 12.0, 61, false}, {0.0, 1.0, 21, false}};
    c.query.target = TargetSpec::belief_at_least(0.9);
    c.query.strategy = Strategy::minimize;
    c.query.horizon = 16 * h.dt;
    c.query.dt = h.dt;
    c.states = {{6.0, 2.0}};
    c.priors = {0.5};
    c.legibility_delta = 0.15;
    out.push_back(c);
  }
  {
    // Which initial weight lets a MaxEnt-style learner reach the human's
    // true trade-off between goal and obstacle features?
    ScenarioConfig c;
    c.name = "gradient-init";
    c.kind = ScenarioKind::gradient_init;
    c.map = "bookstore";
    auto& h = c.human;
    h.kind = HumanKind::pedestrian2d;
    h.speed = 0.6;
    h.dt = 0.2469;
    h.reward_scale = 6.0;
    h.intents = {{"template", {3.0, 17.0}, {1.0, 0.0}, 1.0}};
    c.learner = {LearnerKind::gradient, 0, 1, 0.1, 21};
    c.grid = {{0.1, 19.9, 100, false}, {0.1, 19.9, 100, false}, {0.0, 1.0, 21, false}};
    c.query.target = TargetSpec::estimate_near(0.1, 0.025);
    c.query.strategy = Strategy::minimize;
    c.query.horizon = 29 * h.dt;  // 7.1605 s rounded to whole steps
    c.query.dt = h.dt;
    c.query.interpolation = Interpolation::nearest;
    c.states = {{10.1, 3.1}};
    c.initial_weights = {0.9, 0.25};
    c.target_weight = 0.1;
    out.push_back(c);
  }
  return out;
}

std::optional<ScenarioConfig> find_scenario(const std::string& name) {
  for (auto& c : scenario_catalog()) {
    if (c.name == name) return c;
  }
  return std::nullopt;
}

std::filesystem::path resolve_map_path(const std::string& map) {
  namespace fs = std::filesystem;
  std::vector<fs::path> candidates{fs::path(map)};
  if (const char* env = std::getenv("LEARNREACH_FIXTURES"); env && *env) candidates.push_back(fs::path(env) / map);
  if (*LEARNREACH_FIXTURE_DIR) candidates.push_back(fs::path(LEARNREACH_FIXTURE_DIR) / map);
  for (auto p : candidates) {
    if (p.extension() != ".txt") p += ".txt";
    if (fs::is_regular_file(p)) return p;
  }
  throw ConfigError("map", "cannot find map \"" + map + "\"");
}

ScenarioInstance build_scenario(const ScenarioConfig& config, const std::optional<std::filesystem::path>& cache_dir,
                                unsigned threads) {
  config.validate();
  ScenarioInstance inst;
  inst.config = config;
  inst.map = std::make_shared<OccupancyMap>(load_occupancy_with_sidecar(resolve_map_path(config.map)));
  const HumanModelSpec spec = make_human_spec(config, &inst.weight_nodes);
  auto human = std::make_shared<MapHumanModel>(spec, inst.map, cache_dir, threads);
  inst.human = human;
  LearnerSpec ls;
  ls.kind = config.learner.kind;
  ls.tracked = config.learner.tracked;
  ls.other = config.learner.other;
  ls.learning_rate = config.learner.learning_rate;
  ls.weight_nodes = inst.weight_nodes;
  ls.validate(*human);
  inst.system = std::make_shared<JointSystem>(human, Learner(ls));
  inst.grid = std::make_shared<GridSpace>(config.grid, spec.physical_dims());
  return inst;
}

std::vector<std::vector<double>> ScenarioInstance::initial_states() const {
  std::vector<std::vector<double>> out;
  auto keep = [&](std::vector<double> x) {
    if (!human->occupied(x)) out.push_back(std::move(x));
  };
  if (const auto& lat = config.lattice) {
    const auto nx = static_cast<std::size_t>(lat->x[2]);
    const auto ny = static_cast<std::size_t>(lat->y[2]);
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        std::vector<double> x{axis_value(lat->x, i), axis_value(lat->y, j)};
        x.insert(x.end(), lat->extra.begin(), lat->extra.end());
        keep(std::move(x));
      }
    }
  }
  for (const auto& s : config.states) keep(s);
  return out;
}

std::vector<std::size_t> ScenarioInstance::region_states(const std::string& region) const {
  const auto it = std::find_if(config.regions.begin(), config.regions.end(),
                               [&](const Region& r) { return r.name == region; });
  if (it == config.regions.end()) throw ConfigError("regions", "no region named \"" + region + "\"");
  const auto states = initial_states();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (it->contains(states[i][0], states[i][1])) out.push_back(i);
  }
  return out;
}

std::string to_string(BranchPolicy p) {
  switch (p) {
    case BranchPolicy::safeguard_both:
      return "safeguard_both";
    case BranchPolicy::max_ttl:
      return "max_ttl";
    case BranchPolicy::heuristic:
      return "heuristic";
  }
  return "?";
}

std::vector<const ContingencyTrial*> ContingencyBatch::of(BranchPolicy p) const {
  std::vector<const ContingencyTrial*> out;
  for (const auto& t : trials) {
    if (t.policy == p) out.push_back(&t);
  }
  return out;
}

double ContingencyBatch::mean_efficiency(BranchPolicy p) const {
  const auto ts = of(p);
  if (ts.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto* t : ts) sum += t->result.metrics.efficiency;
  return sum / static_cast<double>(ts.size());
}

double ContingencyBatch::min_safety(BranchPolicy p) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto* t : of(p)) m = std::min(m, t->result.metrics.safety);
  return m;
}

ContingencyBatch run_contingency_batch(const ScenarioInstance& driving, unsigned threads) {
  const ScenarioConfig& c = driving.config;
  if (c.kind != ScenarioKind::driving) throw ConfigError("kind", "contingency batch needs the driving scenario");
  const std::size_t N = c.sim.horizon_steps;

  BranchTimeQuery bq;
  bq.base = c.query;
  bq.base.threads = threads;
  bq.delta = c.branch_delta;
  bq.confidence = c.confidence;
  bq.first = c.learner.tracked;
  bq.second = c.learner.other;
  const BranchTimeSolutions sols = solve_branching(bq, driving.grid, *driving.system);
  const auto heuristic = std::min<std::size_t>(N, static_cast<std::size_t>(std::lround(c.heuristic_branch_time / c.sim.dt)));

  ContingencyBatch batch;
  const std::array<BranchPolicy, 3> policies{BranchPolicy::safeguard_both, BranchPolicy::max_ttl,
                                             BranchPolicy::heuristic};
  for (BranchPolicy policy : policies) {
    for (std::size_t ic = 0; ic < c.sim_human_starts.size(); ++ic) {
      for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t pi = 0; pi < c.sim_priors.size(); ++pi) {
          ContingencyTrial t;
          t.policy = policy;
          t.initial_condition = ic;
          t.true_goal = g;
          t.prior_on_true = c.sim_priors[pi];
          const double b1 = g == 0 ? t.prior_on_true : 1.0 - t.prior_on_true;
          if (policy == BranchPolicy::safeguard_both) {
            t.branch_step = N;
          } else if (policy == BranchPolicy::heuristic) {
            t.branch_step = heuristic;
          } else {
            const auto& x = c.sim_human_starts[ic];
            t.branch = branching_time(sols, make_joint_state(x, b1));
            const auto steps = t.branch.steps();
            t.branch_step = steps ? std::min(*steps, N) : N;
          }
          batch.trials.push_back(std::move(t));
        }
      }
    }
  }

  const std::size_t per_policy = c.sim_human_starts.size() * 2 * c.sim_priors.size();
  parallel_for(batch.trials.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ContingencyTrial& t = batch.trials[i];
      ContingencySimConfig s = c.sim;
      s.human_start = c.sim_human_starts[t.initial_condition];
      s.true_goal = t.true_goal;
      s.prior = t.true_goal == 0 ? t.prior_on_true : 1.0 - t.prior_on_true;
      s.branch_step = t.branch_step;
      // Same human noise across policies so the comparison is paired.
      s.seed = c.sim.seed + i % per_policy;
      t.result = run_contingency_sim(s, *driving.human);
    }
  });
  return batch;
}

}  // namespace learnreach
