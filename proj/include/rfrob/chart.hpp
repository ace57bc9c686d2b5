// Frobenius charts Phi(u, v) = F_{X_1}^{u_1} o ... o F_{X_r}^{u_r}(Gamma(v)),
// their inverses, leaves and Hölder measurements.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfrob/flow.hpp"
#include "rfrob/holder.hpp"
#include "rfrob/involutivity.hpp"
#include "rfrob/vector_field.hpp"

namespace rfrob::chart {

struct ChartOptions {
  double step = 1e-3;        // RK4 step for chart flows
  double tolerance = 1e-8;   // required step-halving accuracy of each flow
  int samples_per_axis = 5;  // forward grid resolution per (u, v) axis
  double fd = 1e-3;          // finite-difference step for du derivatives
};

// Initial surface {x = g(v)} through the base point; g = 0 is the coordinate
// plane. `graph` receives v in its first n - r entries and returns x in its
// first r entries.
struct Surface {
  std::string label = "plane";
  std::function<Point(const Point&)> graph;
};

struct Chart {
  int r = 0, n = 0;
  std::vector<AnalyticVF> basis;
  Point base{0, 0, 0};
  Box u_box, v_box;  // dims r and n - r
  Surface surface;
  ChartOptions opts;

  std::vector<Point> uv;   // forward grid inputs, u in the first r entries
  std::vector<Point> phi;  // Phi at those inputs
  double max_richardson = 0.0;
  double partial_residual = 0.0;     // max |dPhi/du^j - X_j o Phi|
  double triangular_defect = 0.0;    // max |x-part of Phi - (base + g(v) + u)|
  double min_separation = 0.0;       // min distance between images of distinct inputs

  Point surface_point(const Point& v) const {
    Point q = base;
    if (surface.graph) {
      const Point x = surface.graph(v);
      for (int j = 0; j < r; ++j) q[j] += x[j];
    }
    for (int k = 0; k < n - r; ++k) q[r + k] += v[k];
    return q;
  }

  static Point split_v(const Point& uv, int r, int n) {
    Point v{0, 0, 0};
    for (int k = 0; k < n - r; ++k) v[k] = uv[r + k];
    return v;
  }

  // Phi(u, v). With `checked`, every flow is run twice and must meet the
  // tolerance; the step-halving estimate is accumulated into *richardson.
  Point map(const Point& uvp, bool checked = false, double* richardson = nullptr) const {
    Point q = surface_point(split_v(uvp, r, n));
    for (int j = r - 1; j >= 0; --j) q = flow_one(j, uvp[j], q, checked, richardson);
    return q;
  }

  // (mu, lambda) packed like uv.
  Point invert(const Point& q, bool checked = false, double* richardson = nullptr) const {
    Point mu{0, 0, 0};
    for (int j = 0; j < r; ++j) mu[j] = q[j] - base[j];
    auto pull = [&](const Point& m) {
      Point p = q;
      for (int j = 0; j < r; ++j) p = flow_one(j, -m[j], p, checked, richardson);
      return p;
    };
    Point p = pull(mu);
    if (surface.graph) {
      // Newton for mu so that the pulled-back point lies on the surface.
      auto residual = [&](const Point& m, Point& pulled) {
        pulled = pull(m);
        Point v{0, 0, 0};
        for (int k = 0; k < n - r; ++k) v[k] = pulled[r + k] - base[r + k];
        const Point x = surface.graph(v);
        Eigen::VectorXd res(r);
        for (int j = 0; j < r; ++j) res(j) = pulled[j] - base[j] - x[j];
        return res;
      };
      for (int it = 0; it < 30; ++it) {
        Eigen::VectorXd f = residual(mu, p);
        if (f.norm() < 1e-14) break;
        Eigen::MatrixXd J(r, r);
        for (int j = 0; j < r; ++j) {
          Point m2 = mu;
          m2[j] += 1e-7;
          Point tmp;
          J.col(j) = (residual(m2, tmp) - f) / 1e-7;
        }
        const Eigen::VectorXd d = J.partialPivLu().solve(f);
        for (int j = 0; j < r; ++j) mu[j] -= d(j);
        if (d.norm() < 1e-15) {
          p = pull(mu);
          break;
        }
      }
    }
    Point out = mu;
    for (int k = 0; k < n - r; ++k) out[r + k] = p[r + k] - base[r + k];
    return out;
  }

 private:
  Point flow_one(int j, double t, const Point& q, bool checked, double* richardson) const {
    try {
      if (!checked) return flow::flow_point(basis[j], t, q, opts.step);
      const auto cert = flow::integrate_flow(basis[j], t, {q}, {opts.step, opts.tolerance});
      if (richardson) *richardson = std::max(*richardson, cert.richardson_error);
      return cert.endpoints[0];
    } catch (const flow::FlowDomainError& e) {
      throw std::runtime_error(std::string("chart flow left the working box (") + e.what() +
                               "); shrink the u box");
    }
  }
};

// Lattice with m points per axis over the (u, v) box.
inline std::vector<Point> lattice(const Box& u_box, const Box& v_box, int r, int n, int m) {
  std::vector<Point> out;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= m;
  for (int t = 0; t < total; ++t) {
    Point p{0, 0, 0};
    int rem = t;
    for (int i = 0; i < n; ++i) {
      const int k = rem % m;
      rem /= m;
      const double lo = i < r ? u_box.lo[i] : v_box.lo[i - r];
      const double hi = i < r ? u_box.hi[i] : v_box.hi[i - r];
      p[i] = m == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (m - 1.0);
    }
    out.push_back(p);
  }
  return out;
}

// Richardson-extrapolated central difference of Phi along u^j.
inline Point du(const Chart& c, const Point& uvp, int j) {
  auto central = [&](double d) {
    Point a = uvp, b = uvp;
    a[j] += d, b[j] -= d;
    const Point fa = c.map(a), fb = c.map(b);
    Point out{0, 0, 0};
    for (int i = 0; i < c.n; ++i) out[i] = (fa[i] - fb[i]) / (2.0 * d);
    return out;
  };
  const Point d1 = central(c.opts.fd), d2 = central(0.5 * c.opts.fd);
  Point out{0, 0, 0};
  for (int i = 0; i < c.n; ++i) out[i] = (4.0 * d2[i] - d1[i]) / 3.0;
  return out;
}

inline Chart build_chart(const std::vector<AnalyticVF>& basis, const Point& base, const Box& u_box, const Box& v_box,
                         const ChartOptions& opts = {}, Surface surface = {}) {
  if (basis.empty()) throw std::invalid_argument("build_chart: empty basis");
  Chart c;
  c.r = static_cast<int>(basis.size());
  c.n = basis[0].dim;
  if (u_box.dim != c.r || (c.n > c.r && v_box.dim != c.n - c.r))
    throw std::invalid_argument("build_chart: box dimensions must be r and n - r");
  c.basis = basis;
  c.base = base;
  c.u_box = u_box;
  c.v_box = v_box;
  c.v_box.dim = c.n - c.r;
  c.opts = opts;
  c.surface = std::move(surface);
  c.uv = lattice(u_box, c.v_box, c.r, c.n, opts.samples_per_axis);
  double min_sep = std::numeric_limits<double>::infinity();
  for (const auto& p : c.uv) {
    const Point q = c.map(p, true, &c.max_richardson);
    c.phi.push_back(q);
    const Point s = c.surface_point(Chart::split_v(p, c.r, c.n));
    for (int j = 0; j < c.r; ++j) c.triangular_defect = std::max(c.triangular_defect, std::abs(q[j] - s[j] - p[j]));
    for (int j = 0; j < c.r; ++j) {
      const Point d = du(c, p, j);
      const Point x = c.basis[j](q);
      c.partial_residual = std::max(c.partial_residual, distance(d, x, c.n));
    }
  }
  for (std::size_t a = 0; a < c.phi.size(); ++a)
    for (std::size_t b = a + 1; b < c.phi.size(); ++b) min_sep = std::min(min_sep, distance(c.phi[a], c.phi[b], c.n));
  c.min_separation = min_sep;
  return c;
}

inline Chart build_chart(const involutivity::CanonicalBasis& cb, const Point& base, const Box& u_box,
                         const Box& v_box, const ChartOptions& opts = {}, Surface surface = {}) {
  return build_chart(cb.fields, base, u_box, v_box, opts, std::move(surface));
}

struct InverseResult {
  std::vector<Point> mu_lambda;
  double round_trip = 0.0;  // max |Phi(mu, lambda) - q|
};

inline InverseResult invert_chart(const Chart& c, const std::vector<Point>& queries) {
  InverseResult out;
  for (const auto& q : queries) {
    Point ml;
    try {
      ml = c.invert(q, true);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string("query outside chart image: ") + e.what());
    }
    out.mu_lambda.push_back(ml);
    out.round_trip = std::max(out.round_trip, distance(c.map(ml, true), q, c.n));
  }
  return out;
}

// Random points of the chart image: Phi at uniform (u, v).
inline std::vector<Point> image_samples(const Chart& c, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> out;
  for (int k = 0; k < count; ++k) {
    Point p{0, 0, 0};
    for (int i = 0; i < c.n; ++i) {
      const double lo = i < c.r ? c.u_box.lo[i] : c.v_box.lo[i - c.r];
      const double hi = i < c.r ? c.u_box.hi[i] : c.v_box.hi[i - c.r];
      p[i] = lo + (hi - lo) * unit(rng);
    }
    out.push_back(c.map(p));
  }
  return out;
}

struct Leaf {
  std::vector<Point> u;
  std::vector<Point> points;
  double tangent_defect = 0.0;  // max residual of du Phi against span(X_j o Phi)
};

inline Leaf extract_leaf(const Chart& c, const Point& v, int samples_per_axis = 9) {
  for (int k = 0; k < c.n - c.r; ++k)
    if (v[k] < c.v_box.lo[k] || v[k] > c.v_box.hi[k]) throw std::out_of_range("extract_leaf: v outside the v box");
  Leaf leaf;
  for (auto p : lattice(c.u_box, Box{}, c.r, c.r, samples_per_axis)) {
    for (int k = 0; k < c.n - c.r; ++k) p[c.r + k] = v[k];
    const Point q = c.map(p);
    leaf.u.push_back(p);
    leaf.points.push_back(q);
    Eigen::MatrixXd B(c.n, c.r);
    for (int j = 0; j < c.r; ++j) {
      const Point x = c.basis[j](q);
      for (int i = 0; i < c.n; ++i) B(i, j) = x[i];
    }
    for (int j = 0; j < c.r; ++j) {
      const Point d = du(c, p, j);
      Eigen::VectorXd z(c.n);
      for (int i = 0; i < c.n; ++i) z(i) = d[i];
      const Eigen::VectorXd coef = B.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(z);
      leaf.tangent_defect = std::max(leaf.tangent_defect, (z - B * coef).norm());
    }
  }
  return leaf;
}

// Exponent of the forward map near uv_center.
inline HolderEstimate forward_exponent(const Chart& c, const Point& uv_center, const std::vector<double>& scales,
                                       int pairs = 128) {
  return holder_exponent([&](const Point& p) { return c.map(p); }, c.n, c.n, uv_center, scales, pairs);
}

// Exponent of the transverse inverse coordinate lambda near q_center.
inline HolderEstimate inverse_exponent(const Chart& c, const Point& q_center, const std::vector<double>& scales,
                                       int pairs = 128) {
  return holder_exponent(
      [&](const Point& q) {
        const Point ml = c.invert(q);
        Point lam{0, 0, 0};
        for (int k = 0; k < c.n - c.r; ++k) lam[k] = ml[c.r + k];
        return lam;
      },
      c.n, c.n - c.r, q_center, scales, pairs);
}

struct SharpnessRow {
  double extent = 0.0;
  double forward = 0.0;
  double inverse = 0.0;
  double expected = 0.0;  // e^-extent
  bool extrapolated = false;
};

// sharp2d charts on u in [-extent, extent], v in [-0.1, 0.1]. The forward map
// is least regular at u = -extent, the inverse at x = extent. A final row at
// extent 0 extrapolates the measured exponents by the interpolating
// polynomial through the three smallest extents.
inline std::vector<SharpnessRow> sharpness_experiment(const std::vector<double>& extents,
                                                      const std::vector<double>& scales, const ChartOptions& opts = {}) {
  std::vector<SharpnessRow> rows;
  for (double e : extents) {
    if (!(e > 0.0 && e < 2.0)) throw std::out_of_range("sharpness_experiment: extents must lie in (0, 2)");
    Box u_box = Box::cube(1, e), v_box = Box::cube(1, 0.1);
    ChartOptions o = opts;
    o.samples_per_axis = 2;
    const Chart c = build_chart({fields::sharp2d()}, {0, 0, 0}, u_box, v_box, o);
    SharpnessRow row;
    row.extent = e;
    row.expected = std::exp(-e);
    row.forward = forward_exponent(c, {-e, 0, 0}, scales).exponent;
    row.inverse = inverse_exponent(c, {e, 0, 0}, scales).exponent;
    rows.push_back(row);
  }
  if (rows.size() >= 2) {
    std::vector<SharpnessRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.extent < b.extent; });
    const std::size_t m = std::min<std::size_t>(3, sorted.size());
    auto at_zero = [&](auto get) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double l = 1.0;
        for (std::size_t k = 0; k < m; ++k)
          if (k != i) l *= (0.0 - sorted[k].extent) / (sorted[i].extent - sorted[k].extent);
        s += l * get(sorted[i]);
      }
      return s;
    };
    SharpnessRow z;
    z.extent = 0.0;
    z.expected = 1.0;
    z.extrapolated = true;
    z.forward = at_zero([](const SharpnessRow& r) { return r.forward; });
    z.inverse = at_zero([](const SharpnessRow& r) { return r.inverse; });
    rows.push_back(z);
  }
  return rows;
}

}  // namespace rfrob::chart
