#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace learnreach {

inline constexpr std::size_t kMaxDims = 4;

// Value surrogate for +infinity used to mask occupied nodes.
inline constexpr double kLarge = 1e6;

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle to [-pi, pi).
double wrap_angle(double a);

// Human physical state stacked with the learner's estimate.
//
// Coordinates are stored inline (at most kMaxDims) so that states can be
// created in the solver's inner loops without allocating.
class JointState {
 public:
  JointState() = default;
  JointState(std::initializer_list<double> physical,
             std::initializer_list<double> estimate);
  JointState(std::span<const double> physical, std::span<const double> estimate);

  std::size_t dims() const { return n_physical_ + n_estimate_; }
  std::size_t physical_dims() const { return n_physical_; }
  std::size_t estimate_dims() const { return n_estimate_; }

  double& operator[](std::size_t i) { return c_[i]; }
  double operator[](std::size_t i) const { return c_[i]; }

  std::span<const double> coords() const { return {c_.data(), dims()}; }
  std::span<double> coords() { return {c_.data(), dims()}; }
  std::span<const double> physical() const { return {c_.data(), n_physical_}; }
  std::span<double> physical() { return {c_.data(), n_physical_}; }
  std::span<const double> estimate() const { return {c_.data() + n_physical_, n_estimate_}; }

  // First estimate coordinate (belief or reward weight).
  double scalar_estimate() const { return c_[n_physical_]; }
  void set_scalar_estimate(double v) { c_[n_physical_] = v; }

  friend bool operator==(const JointState& a, const JointState& b);

 private:
  std::array<double, kMaxDims> c_{};
  std::uint8_t n_physical_ = 0;
  std::uint8_t n_estimate_ = 0;
};

// One grid axis. Non-periodic axes place nodes on both bounds; periodic
// axes cover [lower, upper) with `nodes` evenly spaced nodes.
struct Axis {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t nodes = 2;
  bool periodic = false;

  double spacing() const;
  double node(std::size_t i) const { return lower + spacing() * static_cast<double>(i); }
};

enum class Interpolation { multilinear, nearest };

// Corner nodes and weights for evaluating a field at an off-grid point.
struct Stencil {
  std::array<std::size_t, 1u << kMaxDims> nodes{};
  std::array<double, 1u << kMaxDims> weights{};
  std::size_t count = 0;
};

// Rectangular discretization of the joint space. Axes [0, physical_dims)
// are physical, the rest hold the estimate. Axes 0 and 1 are planar
// position whenever physical_dims >= 2.
class GridSpace {
 public:
  GridSpace(std::vector<Axis> axes, std::size_t physical_dims);

  std::size_t dims() const { return axes_.size(); }
  std::size_t physical_dims() const { return physical_dims_; }
  const Axis& axis(std::size_t d) const { return axes_[d]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t node_count() const { return node_count_; }
  std::size_t stride(std::size_t d) const { return strides_[d]; }

  std::size_t flat_index(std::span<const std::size_t> idx) const;
  std::array<std::size_t, kMaxDims> multi_index(std::size_t flat) const;
  std::size_t axis_index(std::size_t flat, std::size_t d) const {
    return (flat / strides_[d]) % axes_[d].nodes;
  }

  JointState node_state(std::size_t flat) const;

  // Nearest node under per-dim rounding, ties toward the lower index.
  // Throws OutOfBounds when a non-periodic coordinate lies more than half
  // a cell outside the bounds.
  std::size_t nearest_node(const JointState& z) const;

  // Wraps periodic coordinates and clamps the rest into bounds.
  JointState clamp(const JointState& z) const;
  bool contains(const JointState& z) const;

  // Multilinear stencil over the enclosing 2^d nodes. Zero-weight corners
  // are dropped. Throws OutOfBounds like nearest_node.
  Stencil stencil(const JointState& z) const;

  friend bool operator==(const GridSpace& a, const GridSpace& b);

 private:
  void check_bounds(const JointState& z) const;

  std::vector<Axis> axes_;
  std::size_t physical_dims_;
  std::vector<std::size_t> strides_;
  std::size_t node_count_ = 1;
};

// One real per grid node. Immutable once built.
class NodeField {
 public:
  NodeField(std::shared_ptr<const GridSpace> grid, std::vector<double> values);

  const GridSpace& grid() const { return *grid_; }
  std::shared_ptr<const GridSpace> grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double at(std::size_t flat) const { return values_[flat]; }

  double interpolate(const JointState& z) const;
  double evaluate(const JointState& z, Interpolation mode) const;

 private:
  std::shared_ptr<const GridSpace> grid_;
  std::vector<double> values_;
};

// Evaluates raw node values against a stencil.
double apply_stencil(const Stencil& s, std::span<const double> values);

}  // namespace learnreach
