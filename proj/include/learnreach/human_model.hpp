#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "learnreach/grid.hpp"
#include "learnreach/occupancy.hpp"

namespace learnreach {

enum class HumanKind { dubins3d, pedestrian2d };

// One discrete human control. For dubins3d `control` is an angular velocity
// (rad/s); for pedestrian2d it is a heading (rad). `speed` is the linear
// speed applied with it, so a pedestrian stop action has speed 0.
struct HumanAction {
  double control = 0.0;
  double speed = 0.0;
};

// Reward r = scale * (goal * mu_goal + obstacle * mu_obstacle). With
// theta = [1 - w, w] the gradient scenario sets goal = 1 - w, obstacle = w.
struct RewardWeights {
  double goal = 1.0;
  double obstacle = 0.0;
};

struct Intent {
  std::string name;
  std::array<double, 2> goal{0.0, 0.0};
  RewardWeights weights;
  double beta = 1.0;  // rationality / model confidence
};

struct HumanModelSpec {
  HumanKind kind = HumanKind::pedestrian2d;
  double speed = 0.6;
  double dt = 0.4545;
  std::vector<HumanAction> actions;
  std::vector<Intent> intents;
  double discount = 0.95;
  double clearance_cap = 1.5;
  double reward_scale = 1.0;
  // Steps the action is held when scoring it against the soft value. A
  // single Euler step of a Dubins car does not depend on the turn rate.
  std::size_t q_lookahead = 1;
  std::size_t heading_bins = 24;

  std::size_t physical_dims() const { return kind == HumanKind::dubins3d ? 3 : 2; }
  void validate() const;  // throws ConfigError

  // `headings` evenly spaced headings in [-pi, pi) at `speed`, plus stop.
  static std::vector<HumanAction> pedestrian_actions(double speed, std::size_t headings = 8,
                                                     bool with_stop = true);
  static std::vector<HumanAction> dubins_actions(double speed, const std::vector<double>& rates);
};

std::array<double, 3> step_dubins(const std::array<double, 3>& x, double turn_rate, double speed,
                                  double dt);
std::array<double, 2> step_pedestrian(const std::array<double, 2>& x, double heading, double speed,
                                      double dt);
void step_human(HumanKind kind, std::span<const double> x, const HumanAction& u, double dt,
                std::span<double> out);

// Per-cell values on an occupancy map; sampled bilinearly over free cells.
struct PlanarField {
  std::vector<double> values;  // row-major, same layout as the map

  // Bilinear over the free cell centers around (x, y); nullopt when none
  // of them is free.
  std::optional<double> sample(const OccupancyMap& map, double x, double y) const;
};

// Shortest 8-connected path length (meters) from every cell to the goal
// cell; +inf for occupied or disconnected cells.
PlanarField goal_distance(const OccupancyMap& map, std::array<double, 2> goal);

// Euclidean distance from each free cell center to the nearest occupied
// cell center (or the map border), in meters, capped at `cap`.
PlanarField obstacle_clearance(const OccupancyMap& map, double cap);

// Reward features, both in [-1, 0].
struct RewardFeatures {
  PlanarField goal;      // -distance / max finite distance
  PlanarField obstacle;  // min(clearance, cap) / cap - 1
  std::size_t unreachable_cells = 0;
};
RewardFeatures reward_features(const OccupancyMap& map, std::array<double, 2> goal, double cap);

// State-action values for one intent. Values live on a lattice of map
// cell centers (plus heading bins for Dubins); lookups use the nearest
// lattice node.
class QTable {
 public:
  QTable(Intent intent, GridSpace lattice, std::size_t actions, std::vector<double> values,
         PlanarField soft_value, std::size_t sweeps, double residual, std::size_t unreachable_cells);

  const Intent& intent() const { return intent_; }
  const GridSpace& lattice() const { return lattice_; }
  std::size_t num_actions() const { return actions_; }
  std::span<const double> values() const { return values_; }
  const PlanarField& soft_value() const { return soft_value_; }
  std::size_t sweeps() const { return sweeps_; }
  double residual() const { return residual_; }
  // Free cells with no path to the goal (their actions hold -kLarge).
  std::size_t unreachable_cells() const { return unreachable_; }

  std::span<const double> at(std::span<const double> x) const;
  std::span<const double> at_node(std::size_t node) const {
    return {values_.data() + node * actions_, actions_};
  }

 private:
  Intent intent_;
  GridSpace lattice_;
  std::size_t actions_;
  std::vector<double> values_;
  PlanarField soft_value_;
  std::size_t sweeps_;
  double residual_;
  std::size_t unreachable_;
};

struct SoftValueOptions {
  std::size_t max_sweeps = 500;
  double tolerance = 1e-6;
  // Warm start, one value per cell (e.g. a neighboring weight's solution).
  const PlanarField* initial = nullptr;
};

// Soft value iteration (log-sum-exp over the 8 neighbor moves plus stay,
// discounted) on the free cells of the map.
struct SoftValueResult {
  PlanarField value;
  std::size_t sweeps = 0;
  double residual = 0.0;
};
SoftValueResult soft_value_iteration(const OccupancyMap& map, const PlanarField& reward,
                                     double discount, const SoftValueOptions& options = {});

QTable build_q_table(const HumanModelSpec& spec, const OccupancyMap& map, const Intent& intent,
                     const SoftValueOptions& options = {});

// Same as build_q_table but reads/writes a binary cache file in `cache_dir`
// keyed by (map hash, intent, model parameters).
QTable build_q_table_cached(const HumanModelSpec& spec, const OccupancyMap& map, const Intent& intent,
                            const std::optional<std::filesystem::path>& cache_dir,
                            const SoftValueOptions& options = {});
std::string q_table_cache_key(const HumanModelSpec& spec, const OccupancyMap& map, const Intent& intent);

// Softmax of beta * q. beta = 0 yields the uniform distribution.
void softmax_likelihoods(std::span<const double> q, double beta, std::span<double> out);

// Actions with probability >= delta; the most likely action alone (lowest
// index among ties) when none qualifies.
std::vector<std::size_t> restricted_controls(std::span<const double> probabilities, double delta);

// Human physical model plus intent-conditioned likelihoods. Implementations
// are immutable after construction and safe for concurrent reads.
class HumanModel {
 public:
  virtual ~HumanModel() = default;

  virtual std::size_t physical_dims() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual std::size_t num_intents() const = 0;
  virtual double dt() const = 0;
  virtual double beta(std::size_t intent) const = 0;
  virtual void step(std::span<const double> x, std::size_t action, std::span<double> out) const = 0;
  virtual void q_values(std::span<const double> x, std::size_t intent, std::span<double> out) const = 0;
  virtual bool occupied(std::span<const double> /*x*/) const { return false; }

  void likelihoods(std::span<const double> x, std::size_t intent, std::span<double> out) const;
  double likelihood(std::span<const double> x, std::size_t action, std::size_t intent) const;
  bool blocked(std::span<const double> x, std::size_t action) const;
  std::vector<std::size_t> restricted_controls(std::span<const double> x, std::size_t intent,
                                               double delta) const;
};

// Map-based model: Dubins or pedestrian dynamics with one QTable per intent.
class MapHumanModel : public HumanModel {
 public:
  MapHumanModel(HumanModelSpec spec, std::shared_ptr<const OccupancyMap> map,
                std::optional<std::filesystem::path> cache_dir = std::nullopt, unsigned threads = 0);

  const HumanModelSpec& spec() const { return spec_; }
  const OccupancyMap& map() const { return *map_; }
  const QTable& table(std::size_t intent) const { return tables_[intent]; }

  std::size_t physical_dims() const override { return spec_.physical_dims(); }
  std::size_t num_actions() const override { return spec_.actions.size(); }
  std::size_t num_intents() const override { return spec_.intents.size(); }
  double dt() const override { return spec_.dt; }
  double beta(std::size_t intent) const override { return spec_.intents[intent].beta; }
  void step(std::span<const double> x, std::size_t action, std::span<double> out) const override;
  void q_values(std::span<const double> x, std::size_t intent, std::span<double> out) const override;
  bool occupied(std::span<const double> x) const override;

 private:
  HumanModelSpec spec_;
  std::shared_ptr<const OccupancyMap> map_;
  std::vector<QTable> tables_;
};

// Directory named by LEARNREACH_CACHE, if set.
std::optional<std::filesystem::path> cache_dir_from_env();

}  // namespace learnreach
