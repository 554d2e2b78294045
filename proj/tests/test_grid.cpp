#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "learnreach/errors.hpp"
#include "learnreach/grid.hpp"
#include "learnreach/occupancy.hpp"

using namespace learnreach;

namespace {

std::shared_ptr<const GridSpace> unit_line(std::size_t nodes) {
  return std::make_shared<GridSpace>(std::vector<Axis>{{0.0, 1.0, nodes, false}}, 0);
}

}  // namespace

TEST_CASE("nearest node rounding") {
  const auto g = unit_line(11);
  CHECK(g->nearest_node(JointState({}, {0.30})) == 3);
  CHECK(g->nearest_node(JointState({}, {0.349})) == 3);
  CHECK(g->nearest_node(JointState({}, {0.35})) == 3);
  CHECK(g->nearest_node(JointState({}, {0.351})) == 4);
  CHECK(g->nearest_node(JointState({}, {1.04})) == 10);
  CHECK_THROWS_AS(g->nearest_node(JointState({}, {1.06})), OutOfBounds);
  CHECK_THROWS_AS(g->nearest_node(JointState({}, {-0.06})), OutOfBounds);
}

TEST_CASE("periodic heading wraps") {
  CHECK(wrap_angle(-3.2) == doctest::Approx(-3.2 + 2 * kPi));
  CHECK(wrap_angle(-3.2) == doctest::Approx(3.0831853));
  CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(-kPi));

  GridSpace g({{-kPi, kPi, 24, true}}, 1);
  const std::size_t n = g.nearest_node(JointState({-3.2}, {}));
  CHECK(n == g.nearest_node(JointState({3.0831853}, {})));
  CHECK(n == 0);  // 3.083 is closer to the seam node -pi than to 23 * 2pi/24 - pi
}

TEST_CASE("interpolation basics") {
  const auto g = unit_line(2);
  NodeField lin(g, {0.0, 1.0});
  CHECK(lin.interpolate(JointState({}, {0.25})) == doctest::Approx(0.25));
  NodeField c(unit_line(7), std::vector<double>(7, 3.5));
  for (double z : {0.0, 0.13, 0.5, 0.999, 1.0}) CHECK(c.interpolate(JointState({}, {z})) == 3.5);

  auto g2 = std::make_shared<GridSpace>(std::vector<Axis>{{0, 1, 2, false}, {0, 1, 2, false}}, 2);
  NodeField f(g2, {1.0, 2.0, 5.0, 11.0});
  CHECK(f.interpolate(JointState({0.5, 0.5}, {})) == doctest::Approx((1.0 + 2.0 + 5.0 + 11.0) / 4));
}

TEST_CASE("interpolation is exact at nodes and bounded by corners") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  auto g = std::make_shared<GridSpace>(
      std::vector<Axis>{{-1.0, 3.0, 7, false}, {0.0, 2.0, 5, false}, {-kPi, kPi, 8, true}, {0.0, 1.0, 6, false}}, 3);
  std::vector<double> v(g->node_count());
  for (auto& x : v) x = u(rng);
  NodeField f(g, v);
  for (std::size_t i = 0; i < g->node_count(); ++i) {
    const JointState z = g->node_state(i);
    CHECK(f.interpolate(z) == v[i]);
    CHECK(g->nearest_node(z) == i);
  }
  std::uniform_real_distribution<double> ux(-1.0, 3.0), uy(0.0, 2.0), uh(-kPi, kPi), ub(0.0, 1.0);
  for (int s = 0; s < 500; ++s) {
    const JointState z({ux(rng), uy(rng), uh(rng)}, {ub(rng)});
    const Stencil st = g->stencil(z);
    double lo = 1e300, hi = -1e300, wsum = 0.0;
    for (std::size_t k = 0; k < st.count; ++k) {
      lo = std::min(lo, v[st.nodes[k]]);
      hi = std::max(hi, v[st.nodes[k]]);
      wsum += st.weights[k];
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    const double val = f.interpolate(z);
    CHECK(val >= lo - 1e-12);
    CHECK(val <= hi + 1e-12);
  }
}

TEST_CASE("periodic interpolation is continuous across the seam") {
  auto g = std::make_shared<GridSpace>(std::vector<Axis>{{-kPi, kPi, 12, true}}, 1);
  std::vector<double> v(12);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i * i);
  NodeField f(g, v);
  const double gap = std::abs(v[11] - v[0]);
  const double h = g->axis(0).spacing();
  for (double eps : {1e-1, 1e-3, 1e-6}) {
    const double a = f.interpolate(JointState({kPi - eps}, {}));
    const double b = f.interpolate(JointState({-kPi + eps}, {}));
    CHECK(std::abs(a - b) <= gap * 2 * eps / h + 1e-9);
  }
}

TEST_CASE("nearest mode evaluation") {
  NodeField f(unit_line(3), {1.0, 4.0, 9.0});
  CHECK(f.evaluate(JointState({}, {0.24}), Interpolation::nearest) == 1.0);
  CHECK(f.evaluate(JointState({}, {0.26}), Interpolation::nearest) == 4.0);
  CHECK(f.evaluate(JointState({}, {0.25}), Interpolation::multilinear) == doctest::Approx(2.5));
}

TEST_CASE("grid construction errors") {
  CHECK_THROWS_AS(GridSpace({{1.0, 0.0, 3, false}}, 0), Error);
  CHECK_THROWS_AS(GridSpace({{0.0, 1.0, 1, false}}, 0), Error);
  CHECK_THROWS_AS(NodeField(unit_line(3), {1.0, 2.0}), Error);
}

TEST_CASE("occupancy parsing") {
  const auto empty = parse_occupancy("0 0 0\n0 0 0\n0 0 0\n", 1.0);
  CHECK(empty.occupied_count() == 0);
  for (double x : {0.1, 1.5, 2.9})
    for (double y : {0.1, 1.5, 2.9}) CHECK_FALSE(empty.occupied_at(x, y));

  const auto one = parse_occupancy("0 0 1\n0 0 0\n0 0 0\n", 0.5);
  const auto c = one.cell_center(0, 2);
  CHECK(c[0] == doctest::Approx(1.25));
  CHECK(c[1] == doctest::Approx(1.25));  // row 0 is the top
  CHECK(one.occupied_at(c[0], c[1]));
  CHECK_FALSE(one.occupied_at(0.25, 0.25));
  CHECK(one.occupied_at(-0.1, 0.2));  // outside the map

  CHECK_THROWS_AS(parse_occupancy("0 0 0\n0 0\n", 1.0), ParseError);
  CHECK_THROWS_AS(parse_occupancy("0 2 0\n", 1.0), ParseError);
  CHECK_THROWS_AS(parse_occupancy("0 x 0\n", 1.0), ParseError);
}

TEST_CASE("bookstore fixture occupied fraction") {
  const std::string path = std::string(LEARNREACH_FIXTURE_DIR) + "/bookstore.txt";
  const auto map = load_occupancy_with_sidecar(path);
  CHECK(map.rows() == 100);
  CHECK(map.cols() == 100);
  CHECK(map.meters_per_cell() == doctest::Approx(0.2));

  // independent scan, one character at a time
  std::ifstream in(path);
  std::string line;
  std::size_t ones = 0, total = 0;
  while (std::getline(in, line)) {
    for (char ch : line) {
      if (ch == '1') ++ones;
      if (ch == '0' || ch == '1') ++total;
    }
  }
  CHECK(total == 10000);
  CHECK(map.occupied_count() == ones);
  CHECK(map.occupied_fraction() == doctest::Approx(static_cast<double>(ones) / total));
}

TEST_CASE("missing map file") {
  CHECK_THROWS_AS(load_occupancy("/nonexistent/map.txt", 1.0), Error);
}
