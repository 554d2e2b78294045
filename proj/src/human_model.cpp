#include "learnreach/human_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <queue>
#include <sstream>

#include "learnreach/errors.hpp"
#include "learnreach/parallel.hpp"

namespace learnreach {
namespace {

constexpr std::size_t kMaxActions = 32;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Move {
  int dr;
  int dc;
};
constexpr std::array<Move, 8> kNeighbors{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};

bool free_cell(const OccupancyMap& map, long r, long c) {
  if (r < 0 || c < 0 || r >= static_cast<long>(map.rows()) || c >= static_cast<long>(map.cols())) {
    return false;
  }
  return !map.occupied(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
}

// Diagonal moves may not cut the corner of an occupied cell.
bool move_allowed(const OccupancyMap& map, long r, long c, const Move& m) {
  if (!free_cell(map, r + m.dr, c + m.dc)) return false;
  if (m.dr != 0 && m.dc != 0) {
    return free_cell(map, r + m.dr, c) && free_cell(map, r, c + m.dc);
  }
  return true;
}

std::size_t cell_index(const OccupancyMap& map, std::size_t r, std::size_t c) { return r * map.cols() + c; }

GridSpace make_lattice(const HumanModelSpec& spec, const OccupancyMap& map) {
  const double h = map.meters_per_cell();
  const auto o = map.origin();
  std::vector<Axis> axes{
      {o[0] + 0.5 * h, o[0] + map.width() - 0.5 * h, map.cols(), false},
      {o[1] + 0.5 * h, o[1] + map.height() - 0.5 * h, map.rows(), false},
  };
  if (spec.kind == HumanKind::dubins3d) axes.push_back({-kPi, kPi, spec.heading_bins, true});
  return GridSpace(std::move(axes), axes.size());
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void HumanModelSpec::validate() const {
  if (actions.empty()) throw ConfigError("human.actions", "action set must be nonempty");
  if (actions.size() > kMaxActions) throw ConfigError("human.actions", "at most 32 actions supported");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (std::size_t j = i + 1; j < actions.size(); ++j) {
      if (actions[i].control == actions[j].control && actions[i].speed == actions[j].speed) {
        throw ConfigError("human.actions", "duplicate action");
      }
    }
    if (actions[i].speed < 0.0) throw ConfigError("human.actions", "negative speed");
  }
  if (speed < 0.0) throw ConfigError("human.speed", "must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("human.dt", "must be > 0");
  if (intents.empty()) throw ConfigError("human.intents", "at least one intent required");
  for (const auto& in : intents) {
    if (in.beta < 0.0) throw ConfigError("human.intents.beta", "must be >= 0");
  }
  if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("human.discount", "must lie in (0, 1)");
  if (!(clearance_cap > 0.0)) throw ConfigError("human.clearance_cap", "must be > 0");
  if (!(reward_scale > 0.0)) throw ConfigError("human.reward_scale", "must be > 0");
  if (q_lookahead == 0) throw ConfigError("human.q_lookahead", "must be >= 1");
  if (kind == HumanKind::dubins3d && heading_bins < 2) {
    throw ConfigError("human.heading_bins", "must be >= 2");
  }
}

std::vector<HumanAction> HumanModelSpec::pedestrian_actions(double speed, std::size_t headings,
                                                            bool with_stop) {
  std::vector<HumanAction> out;
  for (std::size_t i = 0; i < headings; ++i) {
    out.push_back({-kPi + 2.0 * kPi * static_cast<double>(i) / static_cast<double>(headings), speed});
  }
  if (with_stop) out.push_back({0.0, 0.0});
  return out;
}

std::vector<HumanAction> HumanModelSpec::dubins_actions(double speed, const std::vector<double>& rates) {
  std::vector<HumanAction> out;
  for (double r : rates) out.push_back({r, speed});
  return out;
}

std::array<double, 3> step_dubins(const std::array<double, 3>& x, double turn_rate, double speed,
                                  double dt) {
  return {x[0] + dt * speed * std::cos(x[2]), x[1] + dt * speed * std::sin(x[2]),
          wrap_angle(x[2] + dt * turn_rate)};
}

std::array<double, 2> step_pedestrian(const std::array<double, 2>& x, double heading, double speed,
                                      double dt) {
  return {x[0] + dt * speed * std::cos(heading), x[1] + dt * speed * std::sin(heading)};
}

void step_human(HumanKind kind, std::span<const double> x, const HumanAction& u, double dt,
                std::span<double> out) {
  if (kind == HumanKind::dubins3d) {
    const auto n = step_dubins({x[0], x[1], x[2]}, u.control, u.speed, dt);
    std::copy(n.begin(), n.end(), out.begin());
  } else {
    const auto n = step_pedestrian({x[0], x[1]}, u.control, u.speed, dt);
    std::copy(n.begin(), n.end(), out.begin());
  }
}

std::optional<double> PlanarField::sample(const OccupancyMap& map, double x, double y) const {
  const double h = map.meters_per_cell();
  const double fx = (x - map.origin()[0]) / h - 0.5;
  const double fy = (y - map.origin()[1]) / h - 0.5;
  const long c0 = static_cast<long>(std::floor(fx));
  const long b0 = static_cast<long>(std::floor(fy));
  const double tx = fx - static_cast<double>(c0);
  const double ty = fy - static_cast<double>(b0);
  const long rows = static_cast<long>(map.rows());
  const long cols = static_cast<long>(map.cols());

  double acc = 0.0;
  double wsum = 0.0;
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty);
      if (w == 0.0) continue;
      const long c = c0 + dx;
      const long b = b0 + dy;
      if (c < 0 || b < 0 || c >= cols || b >= rows) continue;
      const auto r = static_cast<std::size_t>(rows - 1 - b);
      if (map.occupied(r, static_cast<std::size_t>(c))) continue;
      const double v = values[cell_index(map, r, static_cast<std::size_t>(c))];
      if (!std::isfinite(v)) continue;
      acc += w * v;
      wsum += w;
    }
  }
  if (wsum <= 0.0) return std::nullopt;
  return acc / wsum;
}

PlanarField goal_distance(const OccupancyMap& map, std::array<double, 2> goal) {
  const auto goal_cell = map.cell_of(goal[0], goal[1]);
  if (!goal_cell || map.occupied((*goal_cell)[0], (*goal_cell)[1])) {
    throw Error("goal cell is occupied or outside the map");
  }
  const double h = map.meters_per_cell();
  PlanarField dist{std::vector<double>(map.rows() * map.cols(), kInf)};
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t start = cell_index(map, (*goal_cell)[0], (*goal_cell)[1]);
  dist.values[start] = 0.0;
  open.push({0.0, start});
  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    if (d > dist.values[idx]) continue;
    const long r = static_cast<long>(idx / map.cols());
    const long c = static_cast<long>(idx % map.cols());
    for (const auto& m : kNeighbors) {
      if (!move_allowed(map, r, c, m)) continue;
      const double step = (m.dr != 0 && m.dc != 0) ? h * std::sqrt(2.0) : h;
      const std::size_t next = cell_index(map, static_cast<std::size_t>(r + m.dr), static_cast<std::size_t>(c + m.dc));
      if (d + step < dist.values[next]) {
        dist.values[next] = d + step;
        open.push({d + step, next});
      }
    }
  }
  return dist;
}

PlanarField obstacle_clearance(const OccupancyMap& map, double cap) {
  const double h = map.meters_per_cell();
  const long reach = static_cast<long>(std::ceil(cap / h)) + 1;
  const long rows = static_cast<long>(map.rows());
  const long cols = static_cast<long>(map.cols());
  PlanarField out{std::vector<double>(map.rows() * map.cols(), 0.0)};
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (map.occupied(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) continue;
      double best = cap;
      for (long dr = -reach; dr <= reach; ++dr) {
        for (long dc = -reach; dc <= reach; ++dc) {
          if (free_cell(map, r + dr, c + dc)) continue;
          best = std::min(best, h * std::hypot(static_cast<double>(dr), static_cast<double>(dc)));
        }
      }
      out.values[cell_index(map, static_cast<std::size_t>(r), static_cast<std::size_t>(c))] = best;
    }
  }
  return out;
}

RewardFeatures reward_features(const OccupancyMap& map, std::array<double, 2> goal, double cap) {
  RewardFeatures f;
  f.goal = goal_distance(map, goal);
  double max_d = 0.0;
  for (double d : f.goal.values) {
    if (std::isfinite(d)) max_d = std::max(max_d, d);
  }
  for (std::size_t i = 0; i < f.goal.values.size(); ++i) {
    double& d = f.goal.values[i];
    const bool occ = map.occupied(i / map.cols(), i % map.cols());
    if (!std::isfinite(d)) {
      if (!occ) ++f.unreachable_cells;
      d = -1.0;
    } else {
      d = max_d > 0.0 ? -d / max_d : 0.0;
    }
  }
  f.obstacle = obstacle_clearance(map, cap);
  for (double& c : f.obstacle.values) c = std::min(c, cap) / cap - 1.0;
  return f;
}

SoftValueResult soft_value_iteration(const OccupancyMap& map, const PlanarField& reward, double discount,
                                     const SoftValueOptions& options) {
  const std::size_t n = map.rows() * map.cols();
  SoftValueResult res;
  res.value.values = options.initial ? options.initial->values : std::vector<double>(n, 0.0);
  std::vector<double> backup(n, 0.0);
  std::vector<double> next(n, 0.0);
  const long rows = static_cast<long>(map.rows());
  const long cols = static_cast<long>(map.cols());
  std::array<double, 9> terms{};

  for (res.sweeps = 0; res.sweeps < options.max_sweeps;) {
    for (std::size_t i = 0; i < n; ++i) backup[i] = reward.values[i] + discount * res.value.values[i];
    double residual = 0.0;
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        const std::size_t i = cell_index(map, static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (map.occupied(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) {
          next[i] = 0.0;
          continue;
        }
        std::size_t k = 0;
        terms[k++] = backup[i];
        for (const auto& m : kNeighbors) {
          if (!move_allowed(map, r, c, m)) continue;
          terms[k++] = backup[cell_index(map, static_cast<std::size_t>(r + m.dr), static_cast<std::size_t>(c + m.dc))];
        }
        const double mx = *std::max_element(terms.begin(), terms.begin() + static_cast<long>(k));
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += std::exp(terms[j] - mx);
        next[i] = mx + std::log(s);
        residual = std::max(residual, std::abs(next[i] - res.value.values[i]));
      }
    }
    res.value.values.swap(next);
    ++res.sweeps;
    res.residual = residual;
    if (residual < options.tolerance) break;
  }
  return res;
}

QTable::QTable(Intent intent, GridSpace lattice, std::size_t actions, std::vector<double> values,
               PlanarField soft_value, std::size_t sweeps, double residual, std::size_t unreachable_cells)
    : intent_(std::move(intent)), lattice_(std::move(lattice)), actions_(actions), values_(std::move(values)),
      soft_value_(std::move(soft_value)), sweeps_(sweeps), residual_(residual), unreachable_(unreachable_cells) {
  if (values_.size() != lattice_.node_count() * actions_) throw Error("QTable: size mismatch");
}

std::span<const double> QTable::at(std::span<const double> x) const {
  JointState z(x, {});
  return at_node(lattice_.nearest_node(lattice_.clamp(z)));
}

QTable build_q_table(const HumanModelSpec& spec, const OccupancyMap& map, const Intent& intent,
                     const SoftValueOptions& options) {
  spec.validate();
  const RewardFeatures features = reward_features(map, intent.goal, spec.clearance_cap);
  PlanarField reward{std::vector<double>(map.rows() * map.cols(), 0.0)};
  for (std::size_t i = 0; i < reward.values.size(); ++i) {
    reward.values[i] = spec.reward_scale * (intent.weights.goal * features.goal.values[i] +
                                            intent.weights.obstacle * features.obstacle.values[i]);
  }
  const SoftValueResult soft = soft_value_iteration(map, reward, spec.discount, options);
  const PlanarField goal_dist = goal_distance(map, intent.goal);

  GridSpace lattice = make_lattice(spec, map);
  const std::size_t na = spec.actions.size();
  std::vector<double> values(lattice.node_count() * na, -kLarge);
  const std::size_t pd = spec.physical_dims();
  for (std::size_t node = 0; node < lattice.node_count(); ++node) {
    const JointState s = lattice.node_state(node);
    const auto cell = map.cell_of(s[0], s[1]);
    if (!cell || map.occupied((*cell)[0], (*cell)[1])) continue;
    if (!std::isfinite(goal_dist.values[cell_index(map, (*cell)[0], (*cell)[1])])) continue;
    for (std::size_t a = 0; a < na; ++a) {
      std::array<double, 3> x{s[0], s[1], pd == 3 ? s[2] : 0.0};
      std::array<double, 3> nx{};
      bool hit = false;
      for (std::size_t k = 0; k < spec.q_lookahead && !hit; ++k) {
        step_human(spec.kind, std::span<const double>(x.data(), pd), spec.actions[a], spec.dt,
                   std::span<double>(nx.data(), pd));
        x = nx;
        hit = map.occupied_at(x[0], x[1]);
      }
      if (hit) continue;
      const auto v = soft.value.sample(map, x[0], x[1]);
      const auto mg = features.goal.sample(map, x[0], x[1]);
      const auto mo = features.obstacle.sample(map, x[0], x[1]);
      if (!v || !mg || !mo) continue;
      const double r = spec.reward_scale * (intent.weights.goal * *mg + intent.weights.obstacle * *mo);
      values[node * na + a] = r + spec.discount * *v;
    }
  }
  return QTable(intent, std::move(lattice), na, std::move(values), soft.value, soft.sweeps, soft.residual,
                features.unreachable_cells);
}

std::string q_table_cache_key(const HumanModelSpec& spec, const OccupancyMap& map, const Intent& intent) {
  std::ostringstream os;
  os << std::setprecision(17) << "map=" << hex64(map.hash()) << ";kind=" << static_cast<int>(spec.kind)
     << ";dt=" << spec.dt << ";gamma=" << spec.discount << ";cap=" << spec.clearance_cap
     << ";scale=" << spec.reward_scale << ";look=" << spec.q_lookahead << ";bins=" << spec.heading_bins
     << ";goal=" << intent.goal[0] << "," << intent.goal[1] << ";w=" << intent.weights.goal << ","
     << intent.weights.obstacle << ";beta=" << intent.beta << ";actions=";
  for (const auto& a : spec.actions) os << a.control << "@" << a.speed << ",";
  return os.str();
}

namespace {

constexpr char kCacheMagic[8] = {'L', 'R', 'Q', 'T', 'A', 'B', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::ifstream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

std::optional<QTable> read_cached(const std::filesystem::path& file, const std::string& key,
                                  const HumanModelSpec& spec, const OccupancyMap& map, const Intent& intent) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCacheMagic, 8) != 0) return std::nullopt;
  std::uint64_t key_len = 0;
  if (!read_pod(in, key_len) || key_len != key.size()) return std::nullopt;
  std::string stored(key_len, '\0');
  if (!in.read(stored.data(), static_cast<std::streamsize>(key_len)) || stored != key) return std::nullopt;
  std::uint64_t sweeps = 0, unreachable = 0, nq = 0, nv = 0;
  double residual = 0.0;
  if (!read_pod(in, sweeps) || !read_pod(in, residual) || !read_pod(in, unreachable)) return std::nullopt;
  GridSpace lattice = make_lattice(spec, map);
  if (!read_pod(in, nq) || nq != lattice.node_count() * spec.actions.size()) return std::nullopt;
  std::vector<double> q(nq);
  if (!in.read(reinterpret_cast<char*>(q.data()), static_cast<std::streamsize>(nq * sizeof(double)))) {
    return std::nullopt;
  }
  if (!read_pod(in, nv) || nv != map.rows() * map.cols()) return std::nullopt;
  PlanarField v{std::vector<double>(nv)};
  if (!in.read(reinterpret_cast<char*>(v.values.data()), static_cast<std::streamsize>(nv * sizeof(double)))) {
    return std::nullopt;
  }
  return QTable(intent, std::move(lattice), spec.actions.size(), std::move(q), std::move(v), sweeps, residual,
                unreachable);
}

}  // namespace

QTable build_q_table_cached(const HumanModelSpec& spec, const OccupancyMap& map, const Intent& intent,
                            const std::optional<std::filesystem::path>& cache_dir,
                            const SoftValueOptions& options) {
  if (!cache_dir) return build_q_table(spec, map, intent, options);
  const std::string key = q_table_cache_key(spec, map, intent);
  const auto file = *cache_dir / (hex64(fnv1a(key)) + ".qtable");
  if (auto cached = read_cached(file, key, spec, map, intent)) return std::move(*cached);

  QTable table = build_q_table(spec, map, intent, options);
  std::error_code ec;
  std::filesystem::create_directories(*cache_dir, ec);
  // Write to a private temporary then rename so concurrent builders never
  // observe a partial file.
  const auto tmp = file.string() + ".tmp" + hex64(reinterpret_cast<std::uintptr_t>(&table));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return table;
    out.write(kCacheMagic, 8);
    write_pod(out, static_cast<std::uint64_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    write_pod(out, static_cast<std::uint64_t>(table.sweeps()));
    write_pod(out, table.residual());
    write_pod(out, static_cast<std::uint64_t>(table.unreachable_cells()));
    write_pod(out, static_cast<std::uint64_t>(table.values().size()));
    out.write(reinterpret_cast<const char*>(table.values().data()),
              static_cast<std::streamsize>(table.values().size() * sizeof(double)));
    const auto& sv = table.soft_value().values;
    write_pod(out, static_cast<std::uint64_t>(sv.size()));
    out.write(reinterpret_cast<const char*>(sv.data()), static_cast<std::streamsize>(sv.size() * sizeof(double)));
  }
  std::filesystem::rename(tmp, file, ec);
  if (ec) std::filesystem::remove(tmp, ec);
  return table;
}

void softmax_likelihoods(std::span<const double> q, double beta, std::span<double> out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : q) mx = std::max(mx, beta * v);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = std::exp(beta * q[i] - mx);
    s += out[i];
  }
  for (std::size_t i = 0; i < q.size(); ++i) out[i] /= s;
}

std::vector<std::size_t> restricted_controls(std::span<const double> probabilities, double delta) {
  std::vector<std::size_t> out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] >= delta) out.push_back(i);
    if (probabilities[i] > probabilities[best]) best = i;
  }
  if (out.empty()) out.push_back(best);
  return out;
}

void HumanModel::likelihoods(std::span<const double> x, std::size_t intent, std::span<double> out) const {
  std::array<double, kMaxActions> q{};
  const std::size_t n = num_actions();
  q_values(x, intent, std::span<double>(q.data(), n));
  softmax_likelihoods(std::span<const double>(q.data(), n), beta(intent), out.first(n));
}

double HumanModel::likelihood(std::span<const double> x, std::size_t action, std::size_t intent) const {
  std::array<double, kMaxActions> p{};
  likelihoods(x, intent, std::span<double>(p.data(), num_actions()));
  return p[action];
}

bool HumanModel::blocked(std::span<const double> x, std::size_t action) const {
  std::array<double, kMaxDims> next{};
  step(x, action, std::span<double>(next.data(), physical_dims()));
  return occupied(std::span<const double>(next.data(), physical_dims()));
}

std::vector<std::size_t> HumanModel::restricted_controls(std::span<const double> x, std::size_t intent,
                                                         double delta) const {
  std::array<double, kMaxActions> p{};
  likelihoods(x, intent, std::span<double>(p.data(), num_actions()));
  return learnreach::restricted_controls(std::span<const double>(p.data(), num_actions()), delta);
}

MapHumanModel::MapHumanModel(HumanModelSpec spec, std::shared_ptr<const OccupancyMap> map,
                             std::optional<std::filesystem::path> cache_dir, unsigned threads)
    : spec_(std::move(spec)), map_(std::move(map)) {
  spec_.validate();
  std::vector<std::optional<QTable>> built(spec_.intents.size());
  parallel_for(built.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) built[i] = build_q_table_cached(spec_, *map_, spec_.intents[i], cache_dir);
  });
  tables_.reserve(built.size());
  for (auto& t : built) tables_.push_back(std::move(*t));
}

void MapHumanModel::step(std::span<const double> x, std::size_t action, std::span<double> out) const {
  step_human(spec_.kind, x, spec_.actions[action], spec_.dt, out);
}

void MapHumanModel::q_values(std::span<const double> x, std::size_t intent, std::span<double> out) const {
  const auto q = tables_[intent].at(x);
  std::copy(q.begin(), q.end(), out.begin());
}

bool MapHumanModel::occupied(std::span<const double> x) const { return map_->occupied_at(x[0], x[1]); }

std::optional<std::filesystem::path> cache_dir_from_env() {
  const char* dir = std::getenv("LEARNREACH_CACHE");
  if (!dir || !*dir) return std::nullopt;
  return std::filesystem::path(dir);
}

}  // namespace learnreach
