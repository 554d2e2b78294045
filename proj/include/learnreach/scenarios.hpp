#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "learnreach/contingency.hpp"
#include "learnreach/human_model.hpp"
#include "learnreach/learner.hpp"
#include "learnreach/queries.hpp"
#include "learnreach/reach.hpp"

namespace learnreach {

enum class ScenarioKind { driving, confidence, legibility, gradient_init };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);  // throws ConfigError

// Lattice of initial planar positions; occupied points are skipped.
struct StateLattice {
  std::array<double, 3> x{0.0, 1.0, 2.0};  // lower, upper, count
  std::array<double, 3> y{0.0, 1.0, 2.0};
  std::vector<double> extra;                // trailing physical coords (e.g. heading)
};

// Axis-aligned planar box [x0, x1] x [y0, y1].
struct Region {
  std::string name;
  std::array<double, 4> box{0.0, 0.0, 0.0, 0.0};
  bool contains(double x, double y) const { return x >= box[0] && x <= box[1] && y >= box[2] && y <= box[3]; }
};

struct HumanConfig {
  HumanKind kind = HumanKind::pedestrian2d;
  double speed = 0.6;
  double dt = 0.4545;
  std::size_t headings = 8;        // pedestrian
  bool stop = true;                // pedestrian
  std::vector<double> turn_rates;  // dubins
  double discount = 0.95;
  double clearance_cap = 1.5;
  double reward_scale = 1.0;
  std::size_t q_lookahead = 1;
  std::size_t heading_bins = 24;
  // Bayes scenarios list intents directly; the gradient scenario expands
  // intents[0] into one intent per weight node.
  std::vector<Intent> intents;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::bayes;
  std::size_t tracked = 0;
  std::size_t other = 1;
  double learning_rate = 0.1;
  std::size_t weight_nodes = 21;  // gradient: nodes on [0, 1]
};

struct ScenarioConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::confidence;
  std::string map;  // fixture name or path to a text-grid map with sidecar
  HumanConfig human;
  LearnerConfig learner;
  std::vector<Axis> grid;  // physical axes followed by the estimate axis
  QuerySpec query;
  std::vector<std::vector<double>> states;  // explicit initial physical states
  std::optional<StateLattice> lattice;
  std::vector<double> priors;
  std::vector<Region> regions;
  // legibility
  double legibility_delta = 0.15;
  // driving
  double branch_delta = 0.27;
  double confidence = 0.9;
  double heuristic_branch_time = 0.3265;
  std::vector<double> sim_priors;  // prior on the true goal per trial
  ContingencySimConfig sim;
  std::vector<std::array<double, 3>> sim_human_starts;
  // gradient-init
  std::vector<double> initial_weights;
  double target_weight = 0.1;
  std::size_t forward_steps() const;

  void validate() const;  // throws ConfigError
};

nlohmann::json to_json(const ScenarioConfig& c);
// Throws ConfigError naming the offending field.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario_config(const std::filesystem::path& path);

// The four case studies: driving, confidence, legibility, gradient-init.
std::vector<ScenarioConfig> scenario_catalog();
std::optional<ScenarioConfig> find_scenario(const std::string& name);

// Resolves a map name against, in order: the path itself, the fixture
// directory named by LEARNREACH_FIXTURES, and the build-time fixture
// directory. Adds ".txt" when missing.
std::filesystem::path resolve_map_path(const std::string& map);

struct ScenarioInstance {
  ScenarioConfig config;
  std::shared_ptr<const OccupancyMap> map;
  std::shared_ptr<const MapHumanModel> human;
  std::shared_ptr<const JointSystem> system;
  std::shared_ptr<const GridSpace> grid;
  std::vector<double> weight_nodes;  // gradient scenario only

  // Configured initial states (lattice points first), occupied ones dropped.
  std::vector<std::vector<double>> initial_states() const;
  // Indices into initial_states() that fall inside the named region.
  std::vector<std::size_t> region_states(const std::string& region) const;
};

HumanModelSpec make_human_spec(const ScenarioConfig& c, std::vector<double>* weight_nodes = nullptr);
ScenarioInstance build_scenario(const ScenarioConfig& config,
                                const std::optional<std::filesystem::path>& cache_dir = std::nullopt,
                                unsigned threads = 0);

enum class BranchPolicy { safeguard_both, max_ttl, heuristic };
std::string to_string(BranchPolicy p);

struct ContingencyTrial {
  BranchPolicy policy = BranchPolicy::safeguard_both;
  std::size_t initial_condition = 0;
  std::size_t true_goal = 0;
  double prior_on_true = 0.5;
  std::size_t branch_step = 0;
  BranchTime branch;  // max-TTL trials only
  SimResult result;
};

struct ContingencyBatch {
  std::vector<ContingencyTrial> trials;

  std::vector<const ContingencyTrial*> of(BranchPolicy p) const;
  double mean_efficiency(BranchPolicy p) const;
  double min_safety(BranchPolicy p) const;
};

// Every (policy, initial condition, true goal, prior) combination of the
// driving scenario. Branching times for the max-TTL policy come from one
// pair of worst-case solves read at each trial's initial state; when t_b
// does not exist within the horizon the trial safeguards both intents.
ContingencyBatch run_contingency_batch(const ScenarioInstance& driving, unsigned threads = 0);

}  // namespace learnreach
