// Vector fields given by formulas on a working box, and the field catalog.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rfrob/grid.hpp"
#include "rfrob/modulus.hpp"
#include "rfrob/profiles.hpp"

namespace rfrob {

struct Box {
  int dim = 1;
  Point lo{0, 0, 0}, hi{0, 0, 0};

  static Box cube(int dim, double half) {
    Box b;
    b.dim = dim;
    for (int i = 0; i < dim; ++i) b.lo[i] = -half, b.hi[i] = half;
    return b;
  }
  bool contains(const Point& p) const {
    for (int i = 0; i < dim; ++i)
      if (!(p[i] >= lo[i] && p[i] <= hi[i])) return false;
    return true;
  }
  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    return std::sqrt(s);
  }
  Point center() const {
    Point c{0, 0, 0};
    for (int i = 0; i < dim; ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

struct AnalyticVF {
  std::string label;
  int dim = 1;
  std::function<Point(const Point&)> eval;
  Box box;
  std::optional<modulus::Modulus> claimed_modulus;
  // Claimed constant C with |X(u) - X(v)| <= C eta(|u - v|) on the box.
  std::optional<double> claimed_seminorm;
  std::optional<double> c0_bound;  // sup |X|
  std::optional<double> c1_bound;  // Lipschitz constant of X

  Point operator()(const Point& p) const { return eval(p); }
};

namespace fields {

inline AnalyticVF constant(const Point& c, int dim, double half = 1.0) {
  AnalyticVF X;
  X.label = "constant";
  X.dim = dim;
  X.eval = [c](const Point&) { return c; };
  X.box = Box::cube(dim, half);
  X.claimed_modulus = modulus::lipschitz(1.0);
  X.claimed_seminorm = 0.0;
  X.c0_bound = norm(c, dim);
  X.c1_bound = 0.0;
  return X;
}

inline double operator_norm(const Matrix3& A, int dim) {
  Eigen::MatrixXd M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) M(i, j) = A[i][j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

inline AnalyticVF linear(const Matrix3& A, int dim, double half = 1.0) {
  AnalyticVF X;
  X.label = "linear";
  X.dim = dim;
  X.eval = [A, dim](const Point& p) {
    Point v{0, 0, 0};
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) v[i] += A[i][j] * p[j];
    return v;
  };
  X.box = Box::cube(dim, half);
  const double n = operator_norm(A, dim);
  X.claimed_modulus = modulus::lipschitz(1.0);
  X.claimed_seminorm = n;
  X.c0_bound = n * X.box.diameter() / 2.0;
  X.c1_bound = n;
  return X;
}

// X(x) = -x log|x| on [-0.35, 0.35].
inline AnalyticVF neg_x_log_x() {
  AnalyticVF X;
  X.label = "neg_x_log_x";
  X.dim = 1;
  X.eval = [](const Point& p) { return Point{-profiles::ylogy(p[0]), 0, 0}; };
  X.box = Box::cube(1, 0.35);
  X.claimed_modulus = modulus::log_lipschitz();
  X.claimed_seminorm = 2.5;
  X.c0_bound = 0.35 * std::log(1.0 / 0.35);
  return X;
}

// X(x, y) = (1, y log|y|) on [-2, 2] x [-0.35, 0.35].
inline AnalyticVF sharp2d() {
  AnalyticVF X;
  X.label = "sharp2d";
  X.dim = 2;
  X.eval = [](const Point& p) { return Point{1.0, profiles::ylogy(p[1]), 0}; };
  X.box.dim = 2;
  X.box.lo = {-2.0, -0.35, 0};
  X.box.hi = {2.0, 0.35, 0};
  X.claimed_modulus = modulus::log_lipschitz();
  X.claimed_seminorm = 2.5;
  X.c0_bound = std::hypot(1.0, 0.35 * std::log(1.0 / 0.35));
  return X;
}

// X = profile(x_axis_of_dependence) e_1, the shear along the first axis.
inline AnalyticVF shear(std::function<double(double)> profile, int dim, std::string label, double half = 0.4,
                        int dependence_axis = -1) {
  if (dim < 2) throw std::invalid_argument("shear: needs dim >= 2");
  if (dependence_axis < 0) dependence_axis = dim - 1;
  AnalyticVF X;
  X.label = std::move(label);
  X.dim = dim;
  X.eval = [profile = std::move(profile), dependence_axis](const Point& p) {
    return Point{profile(p[dependence_axis]), 0, 0};
  };
  X.box = Box::cube(dim, half);
  return X;
}

// d/dx^j + profile(y) d/dy in R^3, y the last coordinate.
inline AnalyticVF canonical_member(int j, std::function<double(double)> profile, std::string label,
                                   double claimed_seminorm) {
  AnalyticVF X;
  X.label = std::move(label);
  X.dim = 3;
  X.eval = [j, profile = std::move(profile)](const Point& p) {
    Point v{0, 0, profile(p[2])};
    v[j] = 1.0;
    return v;
  };
  X.box.dim = 3;
  X.box.lo = {-1.0, -1.0, -0.35};
  X.box.hi = {1.0, 1.0, 0.35};
  X.claimed_modulus = modulus::log_lipschitz();
  X.claimed_seminorm = claimed_seminorm;
  return X;
}

// Y1 = d/dx1 + c d/dy, Y2 = d/dx2 + 2c d/dy with c(y) = y log|y|.
inline std::vector<AnalyticVF> canonical_proportional() {
  return {canonical_member(0, profiles::ylogy, "prop1", 2.5),
          canonical_member(1, [](double y) { return 2.0 * profiles::ylogy(y); }, "prop2", 5.0)};
}

// Y1 = d/dx1 + a d/dy, Y2 = d/dx2 + b d/dy with a = y log(1/y) on y > 0 and
// b = |y| log(1/|y|) on y < 0 (each zero on the other side).
inline std::vector<AnalyticVF> canonical_complementary() {
  const profiles::OneSided a{1.0, 2.0, true}, b{1.0, 2.0, false};
  return {canonical_member(0, a, "comp1", 2.5), canonical_member(1, b, "comp2", 2.5)};
}

inline AnalyticVF scaled(const AnalyticVF& X, double c) {
  AnalyticVF Y = X;
  Y.label = X.label + "*" + std::to_string(c);
  Y.eval = [f = X.eval, c](const Point& p) {
    Point v = f(p);
    for (double& x : v) x *= c;
    return v;
  };
  const double a = std::abs(c);
  if (X.claimed_seminorm) Y.claimed_seminorm = *X.claimed_seminorm * a;
  if (X.c0_bound) Y.c0_bound = *X.c0_bound * a;
  if (X.c1_bound) Y.c1_bound = *X.c1_bound * a;
  return Y;
}

inline AnalyticVF difference(const AnalyticVF& X, const AnalyticVF& Y) {
  AnalyticVF D = X;
  D.label = X.label + "-" + Y.label;
  D.eval = [f = X.eval, g = Y.eval](const Point& p) {
    Point a = f(p), b = g(p);
    return Point{a[0] - b[0], a[1] - b[1], a[2] - b[2]};
  };
  D.claimed_seminorm.reset();
  D.c0_bound.reset();
  D.c1_bound.reset();
  return D;
}

}  // namespace fields

// Sampled C^eta data of a field: sup |X| and sup |X(u)-X(v)| / eta(|u-v|).
struct CEtaEstimate {
  double sup = 0.0;
  double seminorm = 0.0;
  double total() const { return sup + seminorm; }
};

// Random pairs inside a box: half with uniform partners, half with partners at
// log-uniform distances down to 1e-9.
inline std::vector<std::pair<Point, Point>> sample_pairs(const Box& box, int count, std::uint64_t seed,
                                                         double min_distance = 1e-9) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss;
  auto uniform_point = [&] {
    Point p{0, 0, 0};
    for (int i = 0; i < box.dim; ++i) p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
    return p;
  };
  const double logmin = std::log(min_distance), logmax = std::log(box.diameter());
  std::vector<std::pair<Point, Point>> pairs;
  pairs.reserve(count);
  int guard = 0;
  while (static_cast<int>(pairs.size()) < count && guard++ < 100 * count) {
    Point u = uniform_point(), v;
    if (pairs.size() % 2 == 0) {
      v = uniform_point();
    } else {
      Point dir{0, 0, 0};
      for (int i = 0; i < box.dim; ++i) dir[i] = gauss(rng);
      const double n = norm(dir, box.dim);
      if (n == 0.0) continue;
      const double d = std::exp(logmin + (logmax - logmin) * unit(rng));
      v = axpy(d / n, dir, u);
      if (!box.contains(v)) continue;
    }
    if (distance(u, v, box.dim) == 0.0) continue;
    pairs.emplace_back(u, v);
  }
  return pairs;
}

inline CEtaEstimate estimate_ceta(const AnalyticVF& X, const modulus::Modulus& eta, int pair_count = 10000,
                                  std::uint64_t seed = 17) {
  CEtaEstimate est;
  for (const auto& [u, v] : sample_pairs(X.box, pair_count, seed)) {
    const Point a = X(u), b = X(v);
    est.sup = std::max({est.sup, norm(a, X.dim), norm(b, X.dim)});
    const double d = distance(u, v, X.dim);
    const double diff = distance(a, b, X.dim);
    est.seminorm = std::max(est.seminorm, diff / eta(d));
  }
  return est;
}

struct ClaimCheck {
  bool ok = true;
  double worst_ratio = 0.0;  // max |X(u)-X(v)| / (C eta(|u-v|))
};

// Spot check of the claimed modulus on random pairs.
inline ClaimCheck spot_check_claim(const AnalyticVF& X, int pair_count = 1000, std::uint64_t seed = 5) {
  if (!X.claimed_modulus || !X.claimed_seminorm) throw std::invalid_argument(X.label + ": no claimed modulus");
  ClaimCheck out;
  const double C = *X.claimed_seminorm;
  for (const auto& [u, v] : sample_pairs(X.box, pair_count, seed)) {
    const double diff = distance(X(u), X(v), X.dim);
    const double allowed = C * (*X.claimed_modulus)(distance(u, v, X.dim));
    if (allowed == 0.0) {
      if (diff > 1e-14) out.ok = false;
      continue;
    }
    out.worst_ratio = std::max(out.worst_ratio, diff / allowed);
  }
  if (out.worst_ratio > 1.05) out.ok = false;
  return out;
}

}  // namespace rfrob
