#pragma once

// Test-only: small randomized joint systems and an exhaustive open-loop
// enumeration oracle that is independent of the backward recursion.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "learnreach/grid.hpp"
#include "learnreach/human_model.hpp"
#include "learnreach/reach.hpp"

namespace learnreach::testing {

// Planar human on integer lattice points with unit-step moves and random
// per-cell Q values for two intents.
class TableHumanModel : public HumanModel {
 public:
  TableHumanModel(std::size_t width, std::size_t height, std::vector<std::array<double, 2>> moves,
                  std::vector<double> q, std::vector<std::uint8_t> obstacles, double dt = 1.0)
      : w_(width), h_(height), moves_(std::move(moves)), q_(std::move(q)), obstacles_(std::move(obstacles)),
        dt_(dt) {}

  std::size_t physical_dims() const override { return 2; }
  std::size_t num_actions() const override { return moves_.size(); }
  std::size_t num_intents() const override { return 2; }
  double dt() const override { return dt_; }
  double beta(std::size_t) const override { return 1.0; }

  void step(std::span<const double> x, std::size_t a, std::span<double> out) const override {
    out[0] = x[0] + moves_[a][0];
    out[1] = x[1] + moves_[a][1];
  }

  void q_values(std::span<const double> x, std::size_t intent, std::span<double> out) const override {
    const std::size_t c = cell(x);
    for (std::size_t a = 0; a < moves_.size(); ++a) out[a] = q_[(c * 2 + intent) * moves_.size() + a];
  }

  bool occupied(std::span<const double> x) const override {
    if (x[0] < -0.5 || x[1] < -0.5 || x[0] > static_cast<double>(w_) - 0.5 ||
        x[1] > static_cast<double>(h_) - 0.5) {
      return false;  // clamped back onto the grid by the solver
    }
    return obstacles_[cell(x)] != 0;
  }

 private:
  std::size_t cell(std::span<const double> x) const {
    const auto cx = static_cast<std::size_t>(std::clamp(std::lround(x[0]), 0l, static_cast<long>(w_) - 1));
    const auto cy = static_cast<std::size_t>(std::clamp(std::lround(x[1]), 0l, static_cast<long>(h_) - 1));
    return cy * w_ + cx;
  }

  std::size_t w_, h_;
  std::vector<std::array<double, 2>> moves_;
  std::vector<double> q_;
  std::vector<std::uint8_t> obstacles_;
  double dt_;
};

struct TinyInstance {
  std::shared_ptr<const GridSpace> grid;
  std::shared_ptr<const TableHumanModel> human;
  std::shared_ptr<const JointSystem> system;
  QuerySpec spec;
};

inline TinyInstance make_tiny_instance(std::mt19937_64& rng, bool with_obstacles = true) {
  std::uniform_int_distribution<int> size_d(3, 5), act_d(2, 4), step_d(2, 6), belief_d(6, 11);
  std::uniform_real_distribution<double> q_d(-2.0, 2.0), thr_d(0.6, 0.95);
  const auto w = static_cast<std::size_t>(size_d(rng));
  const auto h = static_cast<std::size_t>(size_d(rng));
  const auto na = static_cast<std::size_t>(act_d(rng));
  const std::vector<std::array<double, 2>> all_moves{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  std::vector<std::array<double, 2>> moves(all_moves.begin(), all_moves.begin() + static_cast<long>(na));
  std::vector<double> q(w * h * 2 * na);
  for (auto& v : q) v = q_d(rng);
  std::vector<std::uint8_t> obstacles(w * h, 0);
  if (with_obstacles && rng() % 2 == 0) obstacles[rng() % obstacles.size()] = 1;

  TinyInstance inst;
  inst.human = std::make_shared<TableHumanModel>(w, h, moves, q, obstacles);
  LearnerSpec ls;
  ls.kind = LearnerKind::bayes;
  inst.system = std::make_shared<JointSystem>(inst.human, Learner(ls));
  const auto nb = static_cast<std::size_t>(belief_d(rng));
  inst.grid = std::make_shared<GridSpace>(
      std::vector<Axis>{{0.0, static_cast<double>(w - 1), w, false},
                        {0.0, static_cast<double>(h - 1), h, false},
                        {0.0, 1.0, nb, false}},
      2);
  inst.spec.target = TargetSpec::belief_at_least(thr_d(rng));
  inst.spec.dt = 1.0;
  inst.spec.horizon = static_cast<double>(step_d(rng));
  inst.spec.interpolation = Interpolation::nearest;
  inst.spec.retain_slices = true;
  inst.spec.threads = 1;
  const double deltas[] = {0.0, 0.2, 0.3};
  const double delta = deltas[rng() % 3];
  if (delta > 0.0) inst.spec.restriction = ControlRestriction::likely_under(rng() % 2, delta);
  return inst;
}

struct OracleResult {
  double min_value = std::numeric_limits<double>::infinity();   // min over sequences of min_t l
  double max_value = -std::numeric_limits<double>::infinity();  // max over sequences of min_t l
  std::size_t min_first_hit = kNoHit;  // earliest hit over sequences
  std::size_t max_first_hit = 0;       // latest first hit (kNoHit if some sequence never hits)
  static constexpr std::size_t kNoHit = std::numeric_limits<std::size_t>::max();
};

// Enumerates every admissible control sequence of length `steps` from node
// `start` under snapped-to-node dynamics.
inline OracleResult enumerate_sequences(const GridSpace& grid, const JointSystem& system, const QuerySpec& spec,
                                        std::size_t start, std::size_t steps) {
  OracleResult res;
  auto snap = [&](const JointState& z) { return grid.node_state(grid.nearest_node(grid.clamp(z))); };
  auto visit = [&](auto&& self, const JointState& z, std::size_t t, double running_min, std::size_t first_hit) -> void {
    const double l = margin(spec.target, z);
    running_min = std::min(running_min, l);
    if (first_hit == OracleResult::kNoHit && l <= 0.0) first_hit = t;
    if (t == steps) {
      res.min_value = std::min(res.min_value, running_min);
      res.max_value = std::max(res.max_value, running_min);
      res.min_first_hit = std::min(res.min_first_hit, first_hit);
      res.max_first_hit = std::max(res.max_first_hit, first_hit);
      return;
    }
    const auto actions = system.admissible(z, spec.restriction);
    if (actions.empty()) {
      self(self, z, t + 1, running_min, first_hit);
      return;
    }
    for (std::size_t a : actions) self(self, snap(system.step(z, a)), t + 1, running_min, first_hit);
  };
  visit(visit, grid.node_state(start), 0, std::numeric_limits<double>::infinity(), OracleResult::kNoHit);
  return res;
}

}  // namespace learnreach::testing
