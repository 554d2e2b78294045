#include "learnreach/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "learnreach/errors.hpp"

namespace learnreach {
namespace {

// Grid coordinates within this distance of an integer (or half-integer,
// for rounding) are treated as exactly on it, so index_to_state followed by
// a lookup is exact.
constexpr double kSnap = 1e-9;

double wrap_periodic(double x, const Axis& ax) {
  const double span = ax.upper - ax.lower;
  double r = std::fmod(x - ax.lower, span);
  if (r < 0.0) r += span;
  double w = ax.lower + r;
  if (w >= ax.upper) w = ax.lower;
  return w;
}

double grid_coordinate(double x, const Axis& ax) {
  double u = (x - ax.lower) / ax.spacing();
  const double r = std::round(u);
  if (std::abs(u - r) < kSnap) u = r;
  return u;
}

}  // namespace

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * kPi;
  double r = std::fmod(a + kPi, two_pi);
  if (r < 0.0) r += two_pi;
  double w = r - kPi;
  if (w >= kPi) w = -kPi;
  return w;
}

JointState::JointState(std::initializer_list<double> physical,
                       std::initializer_list<double> estimate)
    : JointState(std::span<const double>(physical.begin(), physical.size()),
                 std::span<const double>(estimate.begin(), estimate.size())) {}

JointState::JointState(std::span<const double> physical, std::span<const double> estimate) {
  if (physical.size() + estimate.size() > kMaxDims) {
    throw Error("JointState: too many dimensions");
  }
  n_physical_ = static_cast<std::uint8_t>(physical.size());
  n_estimate_ = static_cast<std::uint8_t>(estimate.size());
  std::copy(physical.begin(), physical.end(), c_.begin());
  std::copy(estimate.begin(), estimate.end(), c_.begin() + physical.size());
}

bool operator==(const JointState& a, const JointState& b) {
  if (a.n_physical_ != b.n_physical_ || a.n_estimate_ != b.n_estimate_) return false;
  return std::equal(a.c_.begin(), a.c_.begin() + a.dims(), b.c_.begin());
}

double Axis::spacing() const {
  const double span = upper - lower;
  return periodic ? span / static_cast<double>(nodes) : span / static_cast<double>(nodes - 1);
}

GridSpace::GridSpace(std::vector<Axis> axes, std::size_t physical_dims)
    : axes_(std::move(axes)), physical_dims_(physical_dims) {
  if (axes_.empty() || axes_.size() > kMaxDims) throw Error("GridSpace: 1..4 axes required");
  if (physical_dims_ > axes_.size()) throw Error("GridSpace: physical_dims exceeds dims");
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const Axis& ax = axes_[d];
    if (!(ax.lower < ax.upper)) {
      std::ostringstream os;
      os << "GridSpace: axis " << d << " needs lower < upper";
      throw Error(os.str());
    }
    if (ax.nodes < 2) throw Error("GridSpace: every axis needs at least 2 nodes");
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t d = axes_.size(); d-- > 0;) {
    strides_[d] = node_count_;
    node_count_ *= axes_[d].nodes;
  }
}

std::size_t GridSpace::flat_index(std::span<const std::size_t> idx) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) flat += idx[d] * strides_[d];
  return flat;
}

std::array<std::size_t, kMaxDims> GridSpace::multi_index(std::size_t flat) const {
  std::array<std::size_t, kMaxDims> idx{};
  for (std::size_t d = 0; d < axes_.size(); ++d) idx[d] = axis_index(flat, d);
  return idx;
}

JointState GridSpace::node_state(std::size_t flat) const {
  std::array<double, kMaxDims> c{};
  for (std::size_t d = 0; d < axes_.size(); ++d) c[d] = axes_[d].node(axis_index(flat, d));
  return JointState(std::span<const double>(c.data(), physical_dims_),
                    std::span<const double>(c.data() + physical_dims_, axes_.size() - physical_dims_));
}

void GridSpace::check_bounds(const JointState& z) const {
  if (z.dims() != axes_.size()) throw OutOfBounds("state dimension does not match grid");
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const Axis& ax = axes_[d];
    if (ax.periodic) continue;
    const double half = 0.5 * ax.spacing();
    if (!(z[d] >= ax.lower - half && z[d] <= ax.upper + half)) {
      std::ostringstream os;
      os << "coordinate " << d << " = " << z[d] << " outside [" << ax.lower << ", " << ax.upper << "]";
      throw OutOfBounds(os.str());
    }
  }
}

std::size_t GridSpace::nearest_node(const JointState& z) const {
  check_bounds(z);
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const Axis& ax = axes_[d];
    const double x = ax.periodic ? wrap_periodic(z[d], ax) : z[d];
    const double n = static_cast<double>(ax.nodes);
    double u = grid_coordinate(x, ax);
    if (!ax.periodic) u = std::clamp(u, 0.0, n - 1.0);
    const double fl = std::floor(u);
    const double frac = u - fl;
    std::size_t i = static_cast<std::size_t>(fl);
    if (frac > 0.5 + kSnap) ++i;
    if (ax.periodic && i == ax.nodes) i = 0;
    flat += i * strides_[d];
  }
  return flat;
}

JointState GridSpace::clamp(const JointState& z) const {
  JointState out = z;
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const Axis& ax = axes_[d];
    out[d] = ax.periodic ? wrap_periodic(z[d], ax) : std::clamp(z[d], ax.lower, ax.upper);
  }
  return out;
}

bool GridSpace::contains(const JointState& z) const {
  if (z.dims() != axes_.size()) return false;
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const Axis& ax = axes_[d];
    if (!ax.periodic && (z[d] < ax.lower || z[d] > ax.upper)) return false;
  }
  return true;
}

Stencil GridSpace::stencil(const JointState& z) const {
  check_bounds(z);
  std::array<std::size_t, kMaxDims> lo{}, hi{};
  std::array<double, kMaxDims> t{};
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const Axis& ax = axes_[d];
    const double n = static_cast<double>(ax.nodes);
    if (ax.periodic) {
      const double u = grid_coordinate(wrap_periodic(z[d], ax), ax);
      double fl = std::floor(u);
      if (fl >= n) fl = 0.0;
      lo[d] = static_cast<std::size_t>(fl);
      hi[d] = (lo[d] + 1) % ax.nodes;
      t[d] = u >= n ? 0.0 : u - fl;
    } else {
      const double u = std::clamp(grid_coordinate(z[d], ax), 0.0, n - 1.0);
      double fl = std::floor(u);
      if (fl >= n - 1.0) fl = n - 2.0;
      lo[d] = static_cast<std::size_t>(fl);
      hi[d] = lo[d] + 1;
      t[d] = u - fl;
    }
  }

  Stencil s;
  const std::size_t corners = std::size_t{1} << axes_.size();
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
      const bool upper = (c >> d) & 1u;
      w *= upper ? t[d] : 1.0 - t[d];
      flat += (upper ? hi[d] : lo[d]) * strides_[d];
    }
    if (w == 0.0) continue;
    s.nodes[s.count] = flat;
    s.weights[s.count] = w;
    ++s.count;
  }
  return s;
}

bool operator==(const GridSpace& a, const GridSpace& b) {
  if (a.physical_dims_ != b.physical_dims_ || a.axes_.size() != b.axes_.size()) return false;
  for (std::size_t d = 0; d < a.axes_.size(); ++d) {
    const Axis& x = a.axes_[d];
    const Axis& y = b.axes_[d];
    if (x.lower != y.lower || x.upper != y.upper || x.nodes != y.nodes || x.periodic != y.periodic) {
      return false;
    }
  }
  return true;
}

double apply_stencil(const Stencil& s, std::span<const double> values) {
  double v = 0.0;
  for (std::size_t i = 0; i < s.count; ++i) v += s.weights[i] * values[s.nodes[i]];
  return v;
}

NodeField::NodeField(std::shared_ptr<const GridSpace> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->node_count()) {
    throw Error("NodeField: value count does not match grid node count");
  }
}

double NodeField::interpolate(const JointState& z) const {
  return apply_stencil(grid_->stencil(z), values_);
}

double NodeField::evaluate(const JointState& z, Interpolation mode) const {
  if (mode == Interpolation::nearest) return values_[grid_->nearest_node(z)];
  return interpolate(z);
}

}  // namespace learnreach
