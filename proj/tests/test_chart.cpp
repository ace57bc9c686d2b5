#include <cmath>

#include "catch_amalgamated.hpp"
#include "rfrob/chart.hpp"

using namespace rfrob;
using namespace rfrob::chart;
using Catch::Matchers::WithinAbs;

namespace {

double signed_pow(double v, double p) { return v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), p), v); }

// Phi(u, v) = (u, sgn(v) |v|^{e^u}) for the field (1, y log|y|).
Point sharp_phi(const Point& uv) { return {uv[0], signed_pow(uv[1], std::exp(uv[0])), 0}; }

Chart sharp_chart(double u_half, double v_half, int spa = 5) {
  ChartOptions o;
  o.samples_per_axis = spa;
  return build_chart({fields::sharp2d()}, {0, 0, 0}, Box::cube(1, u_half), Box::cube(1, v_half), o);
}

}  // namespace

TEST_CASE("sharp chart matches its closed form") {
  const auto c = sharp_chart(0.5, 0.1);
  REQUIRE(c.phi.size() == 25);
  double worst = 0.0;
  for (std::size_t i = 0; i < c.uv.size(); ++i) worst = std::max(worst, distance(c.phi[i], sharp_phi(c.uv[i]), 2));
  CHECK(worst < 1e-9);
  CHECK(c.triangular_defect < 1e-12);
  CHECK(c.partial_residual < 1e-7);
  CHECK(c.max_richardson < c.opts.tolerance);
  CHECK(c.min_separation > 1e-9);
}

TEST_CASE("sharp chart inverse matches its closed form") {
  const auto c = sharp_chart(0.5, 0.1);
  const std::vector<Point> queries{{0.3, 0.01, 0}, {-0.4, -0.05, 0}, {0.1, 0.0, 0}, {0.45, -0.002, 0}};
  const auto inv = invert_chart(c, queries);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Point& q = queries[i];
    CHECK_THAT(inv.mu_lambda[i][0], WithinAbs(q[0], 1e-15));
    CHECK_THAT(inv.mu_lambda[i][1], WithinAbs(signed_pow(q[1], std::exp(-q[0])), 1e-9));
  }
  CHECK(inv.round_trip < 1e-8);
}

TEST_CASE("translations give the identity chart") {
  const std::vector<AnalyticVF> basis{fields::constant({1, 0, 0}, 2), fields::constant({0, 1, 0}, 2)};
  Box u = Box::cube(2, 0.5);
  const Point base{0.1, -0.2, 0};
  const auto c = build_chart(basis, base, u, Box{});
  for (std::size_t i = 0; i < c.uv.size(); ++i) {
    CHECK_THAT(c.phi[i][0], WithinAbs(base[0] + c.uv[i][0], 1e-12));
    CHECK_THAT(c.phi[i][1], WithinAbs(base[1] + c.uv[i][1], 1e-12));
  }
  const auto inv = c.invert({0.3, 0.1, 0});
  CHECK_THAT(inv[0], WithinAbs(0.2, 1e-15));
  CHECK_THAT(inv[1], WithinAbs(0.3, 1e-15));
}

TEST_CASE("proportional basis chart") {
  // Flows of Y1 = e1 + c e3 and Y2 = e2 + 2c e3 commute; the z part is the
  // scalar c-flow run for time u1 + 2 u2.
  const auto c = build_chart(fields::canonical_proportional(), {0, 0, 0}, Box::cube(2, 0.1), Box::cube(1, 0.05));
  double worst = 0.0;
  for (std::size_t i = 0; i < c.uv.size(); ++i) {
    const Point& p = c.uv[i];
    const Point expected{p[0], p[1], signed_pow(p[2], std::exp(p[0] + 2 * p[1]))};
    worst = std::max(worst, distance(c.phi[i], expected, 3));
  }
  CHECK(worst < 1e-9);
  CHECK(c.partial_residual < 1e-7);
  const auto inv = invert_chart(c, image_samples(c, 20, 4));
  CHECK(inv.round_trip < 1e-8);
}

TEST_CASE("graph surfaces are inverted by Newton") {
  Surface s;
  s.label = "parabola";
  s.graph = [](const Point& v) { return Point{0.5 * v[0] * v[0], 0, 0}; };
  ChartOptions o;
  o.samples_per_axis = 3;
  const auto c = build_chart({fields::sharp2d()}, {0, 0, 0}, Box::cube(1, 0.3), Box::cube(1, 0.1), o, s);
  CHECK(c.triangular_defect < 1e-12);
  const Point q = c.map({0.2, 0.08, 0});
  const Point ml = c.invert(q);
  CHECK_THAT(ml[0], WithinAbs(0.2, 1e-9));
  CHECK_THAT(ml[1], WithinAbs(0.08, 1e-9));
}

TEST_CASE("leaves of the sharp chart") {
  const auto c = sharp_chart(0.3, 0.1);
  const auto flat = extract_leaf(c, {0, 0, 0});
  for (const auto& q : flat.points) CHECK(q[1] == 0.0);
  CHECK(flat.tangent_defect < 1e-6);
  const auto leaf = extract_leaf(c, {0.1, 0, 0}, 7);
  REQUIRE(leaf.points.size() == 7);
  for (const auto& q : leaf.points) CHECK_THAT(q[1], WithinAbs(std::pow(0.1, std::exp(q[0])), 1e-9));
  CHECK(leaf.tangent_defect < 1e-6);
  CHECK_THROWS_AS(extract_leaf(c, {0.2, 0, 0}), std::out_of_range);
}

TEST_CASE("chart failures are reported") {
  CHECK_THROWS_WITH(sharp_chart(1.9, 0.3), Catch::Matchers::ContainsSubstring("shrink the u box"));
  const auto c = sharp_chart(0.5, 0.1);
  CHECK_THROWS_WITH(invert_chart(c, {{1.9, 0.3, 0}}), Catch::Matchers::ContainsSubstring("query outside chart image"));
  CHECK_THROWS_AS(build_chart(std::vector<AnalyticVF>{}, {0, 0, 0}, Box::cube(1, 0.1), Box::cube(1, 0.1)), std::invalid_argument);
  CHECK_THROWS_AS(build_chart({fields::sharp2d()}, {0, 0, 0}, Box::cube(2, 0.1), Box::cube(1, 0.1)),
                  std::invalid_argument);
}

TEST_CASE("lattice covers the box") {
  const auto pts = lattice(Box::cube(1, 1.0), Box::cube(1, 0.5), 1, 2, 3);
  REQUIRE(pts.size() == 9);
  CHECK(pts.front() == Point{-1.0, -0.5, 0});
  CHECK(pts.back() == Point{1.0, 0.5, 0});
  CHECK(lattice(Box::cube(1, 1.0), Box::cube(1, 0.5), 1, 2, 1).front() == Point{0, 0, 0});
}

TEST_CASE("exponents of the sharp chart degrade with the extent") {
  const auto rows = sharpness_experiment({0.1, 0.2, 0.3}, dyadic_scales(12, 30));
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK_THAT(rows[i].forward, WithinAbs(std::exp(-rows[i].extent), 1e-6));
    CHECK_THAT(rows[i].inverse, WithinAbs(std::exp(-rows[i].extent), 1e-6));
    CHECK_FALSE(rows[i].extrapolated);
  }
  CHECK(rows[3].extrapolated);
  CHECK_THAT(rows[3].forward, WithinAbs(1.0, 0.01));
  CHECK_THAT(rows[3].inverse, WithinAbs(1.0, 0.01));
  CHECK_THROWS_AS(sharpness_experiment({2.5}, dyadic_scales(12, 30)), std::out_of_range);
}

TEST_CASE("points on the initial surface invert to u = 0") {
  const auto c = sharp_chart(0.5, 0.1);
  for (double v : {-0.08, -0.01, 0.0, 0.03, 0.1}) {
    const auto mv = c.invert(c.map({0, v, 0}));
    CHECK(std::abs(mv[0]) < 1e-12);
    CHECK_THAT(mv[1], WithinAbs(v, 1e-12));
  }
}

TEST_CASE("leaf through 1/e") {
  auto X = fields::sharp2d();
  X.box.hi[1] = 0.5;
  Box u;
  u.lo = {0, 0, 0};
  u.hi = {0.5, 0, 0};
  Box v;
  v.lo = {0.3, 0, 0};
  v.hi = {0.4, 0, 0};
  const auto c = build_chart({X}, {0, 0, 0}, u, v);
  const auto leaf = extract_leaf(c, {1.0 / M_E, 0, 0}, 6);
  REQUIRE(leaf.points.size() == 6);
  for (const auto& q : leaf.points) CHECK_THAT(q[1], WithinAbs(std::exp(-std::exp(q[0])), 1e-9));
  CHECK(leaf.tangent_defect < 1e-6);
}
