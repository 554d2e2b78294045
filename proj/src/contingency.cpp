#include "learnreach/contingency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "learnreach/errors.hpp"
#include "learnreach/learner.hpp"

namespace learnreach {
namespace {

using Vec2 = std::array<double, 2>;

Vec2 sub(Vec2 a, Vec2 b) { return {a[0] - b[0], a[1] - b[1]}; }
double norm(Vec2 a) { return std::hypot(a[0], a[1]); }
Vec2 unit(Vec2 a) {
  const double n = norm(a);
  return {a[0] / n, a[1] / n};
}

// Uniform double in [0, 1) from the top 53 bits, independent of the
// standard library's distribution implementations.
double canonical(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

// Most likely action under `intent` among unblocked ones, as the robot
// predicts the human.
std::vector<std::array<double, 3>> predict(const MapHumanModel& human, std::array<double, 3> x, std::size_t intent,
                                           std::size_t steps) {
  std::vector<std::array<double, 3>> out;
  std::vector<double> q(human.num_actions());
  for (std::size_t k = 0; k < steps; ++k) {
    human.q_values(x, intent, q);
    std::optional<std::size_t> best;
    for (std::size_t a = 0; a < q.size(); ++a) {
      if (human.blocked(x, a)) continue;
      if (!best || q[a] > q[*best]) best = a;
    }
    if (best) {
      std::array<double, 3> nx{};
      human.step(x, *best, nx);
      x = nx;
    }
    out.push_back(x);
  }
  return out;
}

struct Profile {
  std::vector<double> s;  // arc length after each step
  double smooth = 0.0;
  bool feasible = true;
};

}  // namespace

Route::Route(std::array<double, 2> start, const std::vector<std::array<double, 2>>& corners,
             std::array<double, 2> goal, double turn_radius) {
  std::vector<Vec2> pts{start};
  pts.insert(pts.end(), corners.begin(), corners.end());
  pts.push_back(goal);
  Vec2 cursor = start;
  auto add_straight = [&](Vec2 to) {
    const double len = norm(sub(to, cursor));
    if (len <= 1e-12) return;
    Piece p;
    p.s0 = length_;
    p.len = len;
    p.p0 = cursor;
    p.dir = unit(sub(to, cursor));
    pieces_.push_back(p);
    length_ += len;
    cursor = to;
  };
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const Vec2 din = unit(sub(pts[i], pts[i - 1]));
    const Vec2 dout = unit(sub(pts[i + 1], pts[i]));
    const double cross = din[0] * dout[1] - din[1] * dout[0];
    const double theta = std::acos(std::clamp(din[0] * dout[0] + din[1] * dout[1], -1.0, 1.0));
    if (theta < 1e-9 || turn_radius <= 0.0) {
      add_straight(pts[i]);
      continue;
    }
    const double t = turn_radius * std::tan(theta / 2.0);
    const Vec2 tin{pts[i][0] - din[0] * t, pts[i][1] - din[1] * t};
    add_straight(tin);
    const double side = cross > 0 ? 1.0 : -1.0;
    Piece arc;
    arc.arc = true;
    arc.s0 = length_;
    arc.radius = turn_radius;
    arc.len = turn_radius * theta;
    arc.center = {tin[0] - side * din[1] * turn_radius, tin[1] + side * din[0] * turn_radius};
    arc.a0 = std::atan2(tin[1] - arc.center[1], tin[0] - arc.center[0]);
    arc.sweep = side * theta;
    pieces_.push_back(arc);
    length_ += arc.len;
    cursor = {pts[i][0] + dout[0] * t, pts[i][1] + dout[1] * t};
  }
  add_straight(goal);
  if (pieces_.empty()) throw ConfigError("sim.robot_goal", "route has zero length");
}

std::array<double, 3> Route::pose(double s) const {
  s = std::clamp(s, 0.0, length_);
  const Piece* p = &pieces_.back();
  for (const auto& piece : pieces_) {
    if (s <= piece.s0 + piece.len) {
      p = &piece;
      break;
    }
  }
  const double u = std::clamp(s - p->s0, 0.0, p->len);
  if (!p->arc) {
    return {p->p0[0] + p->dir[0] * u, p->p0[1] + p->dir[1] * u, std::atan2(p->dir[1], p->dir[0])};
  }
  const double a = p->a0 + p->sweep * (u / p->len);
  const double heading = a + (p->sweep > 0 ? 1.0 : -1.0) * kPi / 2.0;
  return {p->center[0] + p->radius * std::cos(a), p->center[1] + p->radius * std::sin(a), wrap_angle(heading)};
}

void ContingencySimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("sim.dt", "must be > 0");
  if (horizon_steps == 0) throw ConfigError("sim.horizon_steps", "must be >= 1");
  if (branch_step > horizon_steps) throw ConfigError("sim.branch_step", "t_b must not exceed N");
  if (accelerations.empty()) throw ConfigError("sim.accelerations", "trajectory library must be nonempty");
  if (!(robot_max_speed > 0.0)) throw ConfigError("sim.robot_max_speed", "must be > 0");
  if (robot_speed < 0.0 || robot_speed > robot_max_speed) {
    throw ConfigError("sim.robot_speed", "must lie in [0, robot_max_speed]");
  }
  if (true_goal > 1) throw ConfigError("sim.true_goal", "must be 0 or 1");
  if (!(prior >= 0.0 && prior <= 1.0)) throw ConfigError("sim.prior", "must lie in [0, 1]");
  if (!(car_radius >= 0.0)) throw ConfigError("sim.car_radius", "must be >= 0");
}

SimResult run_contingency_sim(const ContingencySimConfig& c, const MapHumanModel& human) {
  c.validate();
  if (human.num_intents() != 2) throw ConfigError("human.intents", "contingency simulation needs two intents");
  if (std::abs(human.dt() - c.dt) > 1e-9) throw InconsistentSpec("simulation dt differs from the human model dt");
  const OccupancyMap& map = human.map();
  const Route route({c.robot_start[0], c.robot_start[1]}, c.robot_corners, c.robot_goal, c.turn_radius);
  const std::size_t N = c.horizon_steps;
  const std::size_t na = c.accelerations.size();

  SimResult res;
  std::mt19937_64 rng(c.seed);
  double s = 0.0;
  double v = c.robot_speed;
  std::array<double, 3> xr = route.pose(0.0);
  std::array<double, 3> xh = c.human_start;
  double belief = std::clamp(c.prior, kBeliefFloor, kBeliefCeil);
  double safety = dist(xr, xh) - 2.0 * c.car_radius;
  std::vector<double> probs(human.num_actions());

  // Arc-length profile for acceleration a1 over steps (k, split] and a2 after.
  auto profile = [&](std::size_t k, std::size_t split, double a1, double a2) {
    Profile p;
    double ss = s, vv = v;
    for (std::size_t t = k + 1; t <= N; ++t) {
      const double a = t <= split ? a1 : a2;
      const double nv = std::clamp(vv + a * c.dt, 0.0, c.robot_max_speed);
      ss += 0.5 * (vv + nv) * c.dt;
      vv = nv;
      p.s.push_back(ss);
      const auto pose = route.pose(ss);
      if (map.occupied_at(pose[0], pose[1])) p.feasible = false;
    }
    p.smooth = c.w_smooth * (a1 * a1 + a2 * a2);
    return p;
  };
  auto collision = [&](const Profile& p, std::size_t k, const std::vector<std::array<double, 3>>& pred,
                       std::size_t from, std::size_t to) {
    double cost = 0.0;
    for (std::size_t t = std::max(from, k + 1); t <= to; ++t) {
      const auto pose = route.pose(p.s[t - k - 1]);
      const double gap = c.safe_distance - dist(pose, pred[t - k - 1]);
      if (gap > 0.0) cost += c.w_collision * gap * gap;
    }
    return cost;
  };
  auto goal_cost = [&](const Profile& p) { return c.w_goal * (route.length() - p.s.back()); };

  for (std::size_t k = 0; k < N; ++k) {
    const std::size_t remaining = N - k;
    const std::array<std::vector<std::array<double, 3>>, 2> pred{predict(human, xh, 0, remaining),
                                                                  predict(human, xh, 1, remaining)};
    const bool committed = k >= c.branch_step;
    const std::size_t split = committed ? k + 1 : c.branch_step;
    const std::size_t likely = belief >= 0.5 ? 0 : 1;
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best_plan = 0;
    double best_a1 = 0.0;
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < na; ++i) {
      const double a1 = c.accelerations[i];
      double cost = 0.0;
      if (committed) {
        // a1 for one step, then the best continuation against the likely intent
        double bc = std::numeric_limits<double>::infinity();
        std::size_t bj = 0;
        for (std::size_t j = 0; j < na; ++j) {
          const Profile p = profile(k, split, a1, c.accelerations[j]);
          if (!p.feasible) {
            ++rejected;
            continue;
          }
          const double jc = collision(p, k, pred[likely], k + 1, N) + p.smooth + goal_cost(p);
          if (jc < bc) {
            bc = jc;
            bj = j;
          }
        }
        cost = bc;
        if (cost < best_cost) best_plan = i * na + bj;
      } else if (split >= N) {
        // safeguard both intents over the whole horizon
        const Profile p = profile(k, N, a1, a1);
        if (!p.feasible) {
          ++rejected;
          continue;
        }
        cost = collision(p, k, pred[0], k + 1, N) + collision(p, k, pred[1], k + 1, N) + p.smooth + goal_cost(p);
        if (cost < best_cost) best_plan = i * na + i;
      } else {
        // shared segment against both predictions, then one branch per intent
        std::array<double, 2> branch{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        std::array<std::size_t, 2> branch_id{0, 0};
        double shared = 0.0;
        bool any = false;
        for (std::size_t j = 0; j < na; ++j) {
          const Profile p = profile(k, split, a1, c.accelerations[j]);
          if (!p.feasible) {
            ++rejected;
            continue;
          }
          any = true;
          shared = collision(p, k, pred[0], k + 1, split) + collision(p, k, pred[1], k + 1, split);
          for (std::size_t g = 0; g < 2; ++g) {
            const double jc = collision(p, k, pred[g], split + 1, N) + p.smooth + goal_cost(p);
            if (jc < branch[g]) {
              branch[g] = jc;
              branch_id[g] = j;
            }
          }
        }
        if (!any) continue;
        cost = shared + belief * branch[0] + (1.0 - belief) * branch[1];
        if (cost < best_cost) best_plan = i * na + branch_id[likely];
      }
      if (cost < best_cost) {
        best_cost = cost;
        best_a1 = a1;
      }
    }
    res.rejected_plans += rejected;
    if (!std::isfinite(best_cost)) best_a1 = c.accelerations.front();  // nothing feasible: brake hardest

    // Human: noisily-rational sample toward the true goal over unblocked actions.
    human.likelihoods(xh, c.true_goal, probs);
    double total = 0.0;
    for (std::size_t a = 0; a < probs.size(); ++a) {
      if (human.blocked(xh, a)) probs[a] = 0.0;
      total += probs[a];
    }
    std::size_t ua = 0;
    bool moved = total > 0.0;
    if (moved) {
      const double u = canonical(rng) * total;
      double acc = 0.0;
      ua = probs.size() - 1;
      for (std::size_t a = 0; a < probs.size(); ++a) {
        acc += probs[a];
        if (probs[a] > 0.0 && u < acc) {
          ua = a;
          break;
        }
      }
      while (probs[ua] == 0.0) --ua;
    }
    res.trace.push_back({k, xr, xh, belief, best_plan, ua});

    if (moved) {
      belief = bayes_update(belief, human, xh, ua, 0, 1).belief;
      std::array<double, 3> nh{};
      human.step(xh, ua, nh);
      xh = nh;
    }
    const double nv = std::clamp(v + best_a1 * c.dt, 0.0, c.robot_max_speed);
    s += 0.5 * (v + nv) * c.dt;
    v = nv;
    xr = route.pose(s);
    safety = std::min(safety, dist(xr, xh) - 2.0 * c.car_radius);
  }
  res.trace.push_back({N, xr, xh, belief, 0, 0});
  res.metrics.efficiency = std::hypot(xr[0] - c.robot_goal[0], xr[1] - c.robot_goal[1]);
  res.metrics.safety = safety;
  return res;
}

}  // namespace learnreach
