// L_j f = 0, f|_S = h by characteristics: f(q) = h(Gamma(lambda(q))).
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfrob/chart.hpp"
#include "rfrob/flow.hpp"
#include "rfrob/holder.hpp"
#include "rfrob/involutivity.hpp"

namespace rfrob::pde {

using BoundaryData = std::function<double(const Point&)>;  // h at a point of S

struct PDEProblem {
  std::string label;
  std::vector<AnalyticVF> operators;
  Point base{0, 0, 0};
  chart::Surface surface;  // S = {x = g(v)} through base
  Box v_box;               // transverse parameter range on S
  BoundaryData h;
  double beta = 1.0;       // Hölder class of h
};

struct PDESolution {
  PDEProblem problem;
  chart::Chart chart;
  double extent = 0.0;
  double min_angle = 0.0;         // smallest principal angle between span(L) and TS
  double boundary_error = 0.0;    // max_S |f o Gamma - h|
  std::vector<Point> points;      // chart forward grid
  std::vector<double> values;     // f there

  // Transverse coordinate lambda(q).
  Point lambda(const Point& q, bool checked = false, double* richardson = nullptr) const {
    const Point ml = chart.invert(q, checked, richardson);
    Point v{0, 0, 0};
    for (int k = 0; k < chart.n - chart.r; ++k) v[k] = ml[chart.r + k];
    return v;
  }
  double operator()(const Point& q) const { return problem.h(chart.surface_point(lambda(q))); }
};

inline constexpr double kBoundaryTolerance = 1e-9;

// Smallest principal angle between span(L_j(q)) and T_q S over a lattice on S.
inline double transversality_angle(const PDEProblem& P, int samples_per_axis = 5) {
  const int r = static_cast<int>(P.operators.size()), n = P.operators[0].dim;
  chart::Chart probe;
  probe.r = r, probe.n = n, probe.base = P.base, probe.surface = P.surface;
  Box empty;
  empty.dim = 0;
  double worst = M_PI / 2;
  for (const auto& p : chart::lattice(empty, P.v_box, 0, n - r, samples_per_axis)) {
    Point v{0, 0, 0};
    for (int k = 0; k < n - r; ++k) v[k] = p[k];
    const Point q = probe.surface_point(v);
    Eigen::MatrixXd L(n, r), T(n, n - r);
    for (int j = 0; j < r; ++j) {
      const Point x = P.operators[j](q);
      for (int i = 0; i < n; ++i) L(i, j) = x[i];
    }
    for (int k = 0; k < n - r; ++k) {
      Point a = v, b = v;
      a[k] += 1e-6, b[k] -= 1e-6;
      const Point qa = probe.surface_point(a), qb = probe.surface_point(b);
      for (int i = 0; i < n; ++i) T(i, k) = (qa[i] - qb[i]) / 2e-6;
    }
    if (n - r == 0) continue;
    const Eigen::MatrixXd QL = Eigen::HouseholderQR<Eigen::MatrixXd>(L).householderQ() * Eigen::MatrixXd::Identity(n, r);
    const Eigen::MatrixXd QT =
        Eigen::HouseholderQR<Eigen::MatrixXd>(T).householderQ() * Eigen::MatrixXd::Identity(n, n - r);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(QL.transpose() * QT);
    const double c = std::min(1.0, svd.singularValues()(0));
    worst = std::min(worst, std::acos(c));
    Eigen::JacobiSVD<Eigen::MatrixXd> rank(L);
    if (rank.singularValues()(r - 1) < 1e-12 * std::max(1.0, rank.singularValues()(0))) worst = 0.0;
  }
  return worst;
}

// Builds the chart adapted to S on u in [-extent, extent]^r and evaluates f on
// its forward grid.
inline PDESolution solve_characteristics(const PDEProblem& P, double extent, const chart::ChartOptions& opts = {}) {
  if (P.operators.empty()) throw std::invalid_argument("solve_characteristics: no operators");
  if (!P.h) throw std::invalid_argument("solve_characteristics: no boundary data");
  if (!(extent > 0.0)) throw std::out_of_range("solve_characteristics: extent must be positive");
  const int r = static_cast<int>(P.operators.size()), n = P.operators[0].dim;
  PDESolution sol;
  sol.problem = P;
  sol.extent = extent;
  sol.problem.v_box.dim = n - r;
  sol.min_angle = transversality_angle(sol.problem);
  if (sol.min_angle < 1e-6) throw std::runtime_error("transversality fails: operators are tangent to the initial surface");
  const auto cb = involutivity::canonical_basis(P.operators, P.base, P.operators[0].box);
  try {
    sol.chart = chart::build_chart(cb.fields, P.base, Box::cube(r, extent), sol.problem.v_box, opts, P.surface);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("solve_characteristics: ") + e.what() + "; reduce the extent");
  }
  for (const auto& q : sol.chart.phi) {
    sol.points.push_back(q);
    sol.values.push_back(sol(q));
  }
  for (std::size_t i = 0; i < sol.chart.uv.size(); ++i) {
    const Point v = chart::Chart::split_v(sol.chart.uv[i], r, n);
    const Point s = sol.chart.surface_point(v);
    sol.boundary_error = std::max(sol.boundary_error, std::abs(sol(s) - P.h(s)));
  }
  return sol;
}

struct FlowResidual {
  std::vector<double> per_operator;  // sup_q |f(F_{L_j}^t q) - f(q)|
  double sup = 0.0;
  double tolerance = 0.0;            // 10x chart integrator tolerance
  bool pass = true;
};

// Invariance of f along the flows of the original operators, at seeds whose
// u-coordinates leave room for the probe time.
inline FlowResidual residual_along_flows(const PDESolution& sol, double t_probe, int seeds = 200,
                                         std::uint64_t seed = 7) {
  const auto& c = sol.chart;
  if (std::abs(t_probe) >= sol.extent) throw std::out_of_range("residual_along_flows: probes leave the chart image");
  FlowResidual out;
  out.tolerance = 10.0 * c.opts.tolerance;
  out.per_operator.assign(c.r, 0.0);
  if (t_probe == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double room = sol.extent - std::abs(t_probe);
  for (int s = 0; s < seeds; ++s) {
    Point p{0, 0, 0};
    for (int j = 0; j < c.r; ++j) p[j] = -room + 2.0 * room * unit(rng);
    for (int k = 0; k < c.n - c.r; ++k) p[c.r + k] = c.v_box.lo[k] + (c.v_box.hi[k] - c.v_box.lo[k]) * unit(rng);
    const Point q = c.map(p);
    const double fq = sol(q);
    for (int j = 0; j < c.r; ++j) {
      const Point moved = flow::flow_point(sol.problem.operators[j], t_probe, q, c.opts.step);
      out.per_operator[j] = std::max(out.per_operator[j], std::abs(sol(moved) - fq));
    }
  }
  for (double v : out.per_operator) out.sup = std::max(out.sup, v);
  out.pass = out.sup <= out.tolerance;
  return out;
}

struct RegularityReport {
  HolderEstimate estimate;
  double predicted = 0.0;  // beta * exp(-c * r * extent)
  bool pass = true;
};

// Exponent of f at the far edge Phi(extent, ..., extent, 0), where the
// characteristics have run longest.
inline RegularityReport solution_regularity(const PDESolution& sol, const std::vector<double>& scales,
                                            int pairs = 128) {
  const auto& c = sol.chart;
  Point uv{0, 0, 0};
  for (int j = 0; j < c.r; ++j) uv[j] = sol.extent;
  const Point center = c.map(uv);
  RegularityReport out;
  out.estimate = holder_exponent([&](const Point& q) { return Point{sol(q), 0, 0}; }, c.n, 1, center, scales, pairs);
  double cmax = 0.0;
  for (const auto& L : c.basis) {
    const double s = L.claimed_modulus ? flow::seminorm_for_certificate(L) : 0.0;
    cmax = std::max(cmax, s);
  }
  out.predicted = sol.problem.beta * std::exp(-cmax * c.r * sol.extent);
  out.pass = out.estimate.exponent >= out.predicted - 0.05;
  return out;
}

inline std::vector<Point> interior_queries(const PDESolution& sol, int count, std::uint64_t seed) {
  return chart::image_samples(sol.chart, count, seed);
}

struct UniquenessCheck {
  double difference = 0.0;  // max |lambda_step - lambda_step/2|
  double estimate = 0.0;    // step-halving estimate of the coarser solve
  bool pass = true;
};

// Two solves with steps h and h/2 agree to within the coarser estimate.
inline UniquenessCheck uniqueness_check(const PDEProblem& P, double extent, const chart::ChartOptions& opts,
                                        int queries = 50, std::uint64_t seed = 9) {
  chart::ChartOptions fine = opts;
  fine.step = 0.5 * opts.step;
  fine.tolerance = 0.0;
  chart::ChartOptions coarse = opts;
  coarse.tolerance = 0.0;
  const auto a = solve_characteristics(P, extent, coarse), b = solve_characteristics(P, extent, fine);
  UniquenessCheck out;
  const int m = a.chart.n - a.chart.r;
  for (const auto& q : interior_queries(a, queries, seed)) {
    double est = 0.0, dummy = 0.0;
    const Point la = a.lambda(q, true, &est), lb = b.lambda(q, true, &dummy);
    out.estimate = std::max(out.estimate, est);
    out.difference = std::max(out.difference, distance(la, lb, m));
  }
  out.pass = out.difference <= out.estimate + 1e-14;
  return out;
}

struct LinearityCheck {
  double defect = 0.0;  // max |f_{h1+h2} - f_{h1} - f_{h2}|
  bool pass = true;
};

inline LinearityCheck linearity_check(const PDEProblem& P, const BoundaryData& h1, const BoundaryData& h2,
                                      double extent, const chart::ChartOptions& opts = {}, int queries = 50) {
  PDEProblem p1 = P, p2 = P, p12 = P;
  p1.h = h1;
  p2.h = h2;
  p12.h = [h1, h2](const Point& q) { return h1(q) + h2(q); };
  const auto s1 = solve_characteristics(p1, extent, opts);
  PDESolution s2 = s1, s12 = s1;
  s2.problem = p2;
  s12.problem = p12;
  LinearityCheck out;
  for (const auto& q : interior_queries(s1, queries, 13))
    out.defect = std::max(out.defect, std::abs(s12(q) - s1(q) - s2(q)));
  out.pass = out.defect <= 1e-9;
  return out;
}

// Catalog problems.
namespace problems {

inline PDEProblem sharp2d(BoundaryData h, double beta = 1.0) {
  PDEProblem P;
  P.label = "sharp2d";
  P.operators = {fields::sharp2d()};
  P.v_box = Box::cube(1, 0.1);
  P.h = std::move(h);
  P.beta = beta;
  return P;
}

inline PDEProblem translation2d(BoundaryData h, double beta = 1.0) {
  PDEProblem P;
  P.label = "translation2d";
  auto X = fields::constant({1, 0, 0}, 2, 2.0);
  X.label = "e1";
  P.operators = {X};
  P.v_box = Box::cube(1, 0.5);
  P.h = std::move(h);
  P.beta = beta;
  return P;
}

inline PDEProblem proportional3d(BoundaryData h, double beta = 1.0) {
  PDEProblem P;
  P.label = "proportional3d";
  P.operators = fields::canonical_proportional();
  P.v_box = Box::cube(1, 0.05);
  P.h = std::move(h);
  P.beta = beta;
  return P;
}

}  // namespace problems

}  // namespace rfrob::pde
