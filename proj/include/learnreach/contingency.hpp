#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "learnreach/human_model.hpp"

namespace learnreach {

// Lane route for the robot: straight segments through `corners` to the
// goal, each corner rounded by a circular arc of `turn_radius`.
class Route {
 public:
  Route(std::array<double, 2> start, const std::vector<std::array<double, 2>>& corners,
        std::array<double, 2> goal, double turn_radius);

  double length() const { return length_; }
  // Pose (x, y, heading) at arc length s, clamped to [0, length].
  std::array<double, 3> pose(double s) const;

 private:
  struct Piece {
    bool arc = false;
    double s0 = 0.0, len = 0.0;
    std::array<double, 2> p0{}, dir{};      // straight
    std::array<double, 2> center{};         // arc
    double radius = 0.0, a0 = 0.0, sweep = 0.0;
  };
  std::vector<Piece> pieces_;
  double length_ = 0.0;
};

struct ContingencySimConfig {
  double dt = 0.0891;
  std::size_t horizon_steps = 30;  // N
  std::size_t branch_step = 30;    // t_b; N means safeguard both intents throughout

  // Robot: Dubins car following its lane route; the library varies the
  // acceleration before and after the branch point.
  std::array<double, 3> robot_start{4.0, -14.0, 1.5707963267948966};
  std::vector<std::array<double, 2>> robot_corners{{4.0, 4.0}};
  std::array<double, 2> robot_goal{-22.0, 4.0};
  double turn_radius = 4.0;
  double robot_speed = 8.0;
  double robot_max_speed = 12.0;
  std::vector<double> accelerations{-8, -7, -6, -5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5};

  // Cost weights.
  double w_goal = 1.0;
  double w_collision = 200.0;
  double w_smooth = 0.01;
  double safe_distance = 4.0;  // collision penalty starts below this center distance
  double car_radius = 1.0;

  // Human.
  std::array<double, 3> human_start{-4.0, 14.0, -1.5707963267948966};
  std::size_t true_goal = 0;
  double prior = 0.5;  // b(g1), intent 0
  std::uint64_t seed = 0;

  std::size_t library_size() const { return accelerations.size() * accelerations.size(); }
  void validate() const;  // throws ConfigError
};

struct SimStep {
  std::size_t t = 0;
  std::array<double, 3> robot{};
  std::array<double, 3> human{};
  double belief = 0.0;  // b(g1)
  std::size_t plan = 0;
  std::size_t human_action = 0;
};

struct SimMetrics {
  double efficiency = 0.0;  // final distance to the robot goal, meters
  double safety = 0.0;      // min center distance minus both radii, meters
};

struct SimResult {
  SimMetrics metrics;
  std::vector<SimStep> trace;
  std::size_t rejected_plans = 0;  // library entries dropped by the static obstacle filter
};

// Receding-horizon planner over the trajectory library. Before the branch
// step the plan minimizes the shared cost against both intents' predicted
// trajectories plus the belief-weighted best branch cost per intent; from
// the branch step on it plans against the most likely intent only. The
// human samples noisily-rational actions toward the true goal and the
// belief follows the Bayes update. `human` must hold exactly two intents.
SimResult run_contingency_sim(const ContingencySimConfig& config, const MapHumanModel& human);

}  // namespace learnreach
