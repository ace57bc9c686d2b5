// Lie brackets of grid fields, smoothing sequences S_nu(chi X), canonical
// commuting bases, span defects and flow commutator defects.
#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfrob/flow.hpp"
#include "rfrob/grid.hpp"
#include "rfrob/spectral.hpp"
#include "rfrob/stats.hpp"
#include "rfrob/vector_field.hpp"

namespace rfrob::involutivity {

using spectral::LPChar;
using spectral::Spectrum;

// Ambient point of grid node `flat`; coordinates not carried by the grid are 0.
inline Point ambient_node(const GridSpec& g, const std::vector<int>& axes, std::size_t flat) {
  const Point local = g.node(flat);
  Point p{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) p[axes[a]] = local[a];
  return p;
}

inline VecField sample_field(const AnalyticVF& X, const GridSpec& g, const std::vector<int>& axes) {
  std::vector<std::vector<double>> comp(X.dim, std::vector<double>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point v = X(ambient_node(g, axes, k));
    for (int i = 0; i < X.dim; ++i) comp[i][k] = std::isfinite(v[i]) ? v[i] : 0.0;
  }
  std::vector<ScalarField> cs;
  for (auto& c : comp) cs.emplace_back(g, std::move(c));
  return VecField(g, axes, std::move(cs));
}

// Largest change of X along ambient coordinates the grid omits, over random
// probes; reduced grids are only valid when this is zero.
inline double omitted_axis_variation(const AnalyticVF& X, const std::vector<int>& axes, int probes = 200,
                                     std::uint64_t seed = 3) {
  std::vector<bool> carried(X.dim, false);
  for (int a : axes) carried[a] = true;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    Point p{0, 0, 0};
    for (int i = 0; i < X.dim; ++i) p[i] = X.box.lo[i] + (X.box.hi[i] - X.box.lo[i]) * u(rng);
    Point q = p;
    for (int i = 0; i < X.dim; ++i)
      if (!carried[i]) q[i] = X.box.lo[i] + (X.box.hi[i] - X.box.lo[i]) * u(rng);
    worst = std::max(worst, distance(X(p), X(q), X.dim));
  }
  return worst;
}

// Six-point periodic Lagrange interpolation of a grid field, as an
// AnalyticVF on `box`.
inline AnalyticVF interpolate(const VecField& F, std::string label, const Box& box) {
  auto data = std::make_shared<const VecField>(F);
  AnalyticVF X;
  X.label = std::move(label);
  X.dim = F.ambient_dim();
  X.box = box;
  X.eval = [data](const Point& p) {
    const GridSpec& g = data->grid();
    const int n = g.points_per_axis;
    const double h = g.spacing();
    int base[kMaxDim] = {0, 0, 0};
    double w[kMaxDim][6];
    for (int a = 0; a < g.dim; ++a) {
      const double s = (p[data->axes()[a]] - g.lower()) / h;
      const double fl = std::floor(s);
      const double fr = s - fl;
      base[a] = static_cast<int>(fl) - 2;
      for (int k = 0; k < 6; ++k) {
        double l = 1.0;
        for (int m = 0; m < 6; ++m)
          if (m != k) l *= (fr - (m - 2)) / static_cast<double>(k - m);
        w[a][k] = l;
      }
    }
    Point out{0, 0, 0};
    const int taps = g.dim == 1 ? 6 : (g.dim == 2 ? 36 : 216);
    for (int t = 0; t < taps; ++t) {
      std::array<int, kMaxDim> idx{0, 0, 0};
      double weight = 1.0;
      int rem = t;
      for (int a = 0; a < g.dim; ++a) {
        const int k = rem % 6;
        rem /= 6;
        idx[a] = ((base[a] + k) % n + n) % n;
        weight *= w[a][k];
      }
      const std::size_t flat = g.flatten(idx);
      for (int i = 0; i < data->ambient_dim(); ++i) out[i] += weight * (*data)[i][flat];
    }
    return out;
  };
  return X;
}

// [X, Y] = X.grad Y - Y.grad X with spectral derivatives along the grid axes.
inline VecField lie_bracket(const VecField& X, const VecField& Y) {
  if (!X.compatible(Y)) throw std::invalid_argument("lie_bracket: fields live on different grids");
  const GridSpec& g = X.grid();
  const int n = X.ambient_dim();
  std::vector<ScalarField> out;
  for (int i = 0; i < n; ++i) {
    Spectrum sx(X[i]), sy(Y[i]);
    ScalarField acc(g);
    for (int a = 0; a < g.dim; ++a) {
      const int ambient = X.axes()[a];
      acc += X[ambient] * sy.derivative(a);
      acc -= Y[ambient] * sx.derivative(a);
    }
    out.push_back(std::move(acc));
  }
  return VecField(g, X.axes(), std::move(out));
}

struct Cutoff {
  Point center{0, 0, 0};  // ambient coordinates
  double inner = 0.25;
  double outer = 0.4;
};

// Nodes whose carried coordinates lie in the box.
inline std::vector<std::size_t> nodes_in(const GridSpec& g, const std::vector<int>& axes, const Box& box) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point p = ambient_node(g, axes, k);
    bool in = true;
    for (int a = 0; a < g.dim; ++a) {
      const int i = axes[a];
      if (p[i] < box.lo[i] || p[i] > box.hi[i]) in = false;
    }
    if (in) out.push_back(k);
  }
  return out;
}

struct FieldNorms {
  double c0 = 0.0;   // sup |X|
  double lip = 0.0;  // sup of the Frobenius norm of the Jacobian
  double c1() const { return c0 + lip; }
};

inline FieldNorms field_norms(const VecField& F, const std::vector<std::size_t>& nodes) {
  const GridSpec& g = F.grid();
  std::vector<ScalarField> d;
  for (int i = 0; i < F.ambient_dim(); ++i) {
    Spectrum s(F[i]);
    for (int a = 0; a < g.dim; ++a) d.push_back(s.derivative(a));
  }
  FieldNorms n;
  for (std::size_t k : nodes) {
    n.c0 = std::max(n.c0, norm(F.at(k), F.ambient_dim()));
    double s = 0.0;
    for (const auto& f : d) s += f[k] * f[k];
    n.lip = std::max(n.lip, std::sqrt(s));
  }
  return n;
}

inline double sup_on(const VecField& F, const std::vector<std::size_t>& nodes) {
  double m = 0.0;
  for (std::size_t k : nodes) m = std::max(m, norm(F.at(k), F.ambient_dim()));
  return m;
}

struct SmoothingSequence {
  std::string label;
  GridSpec grid;
  std::vector<int> axes;
  Cutoff cutoff;
  Box u0;
  std::vector<int> nus;
  std::vector<VecField> fields;       // X_nu = S_nu(chi X)
  std::vector<FieldNorms> norms;      // on U0
  std::vector<double> c0_error;       // sup_{U0} |X_nu - X|
  double sup_cut = 0.0;               // sup |chi X| on the grid
  stats::LinearFit c1_fit;            // c1 against nu
  double c1_constant = 0.0;           // max_nu c1(nu) / nu
  double omitted_variation = 0.0;

  // X_nu as an evaluable field on U0, carrying its C^0 and Lipschitz bounds.
  AnalyticVF field(std::size_t i) const {
    AnalyticVF X = interpolate(fields.at(i), label + "_nu" + std::to_string(nus.at(i)), u0);
    X.c0_bound = norms.at(i).c0;
    X.c1_bound = norms.at(i).lip;
    return X;
  }
  std::size_t index_of(int nu) const {
    for (std::size_t i = 0; i < nus.size(); ++i)
      if (nus[i] == nu) return i;
    throw std::out_of_range("smoothing sequence has no nu = " + std::to_string(nu));
  }
};

inline SmoothingSequence build_smoothing_sequence(const AnalyticVF& X, const GridSpec& grid,
                                                  const std::vector<int>& axes, const Cutoff& cutoff,
                                                  const Box& u0, const std::vector<int>& nus, const LPChar& ch) {
  if (static_cast<int>(axes.size()) != grid.dim) throw std::invalid_argument("smoothing: one axis per grid axis");
  // The cutoff inner ball must contain U0 (in the carried coordinates).
  double reach = 0.0;
  for (int a = 0; a < grid.dim; ++a) {
    const int i = axes[a];
    const double r = std::max(std::abs(u0.lo[i] - cutoff.center[i]), std::abs(u0.hi[i] - cutoff.center[i]));
    reach += r * r;
  }
  if (std::sqrt(reach) > cutoff.inner) throw std::invalid_argument("smoothing: cutoff inner region must contain U0");
  Point local_center{0, 0, 0};
  for (int a = 0; a < grid.dim; ++a) local_center[a] = cutoff.center[axes[a]];
  const ScalarField chi = spectral::cutoff_field(grid, local_center, cutoff.inner, cutoff.outer);

  SmoothingSequence seq;
  seq.label = X.label;
  seq.grid = grid;
  seq.axes = axes;
  seq.cutoff = cutoff;
  seq.u0 = u0;
  seq.omitted_variation = grid.dim < X.dim ? omitted_axis_variation(X, axes) : 0.0;
  const VecField raw = sample_field(X, grid, axes);
  std::vector<Spectrum> spectra;
  for (int i = 0; i < X.dim; ++i) {
    const ScalarField c = chi * raw[i];
    seq.sup_cut = std::max(seq.sup_cut, c.sup_norm());
    spectra.emplace_back(c);
  }
  const auto nodes = nodes_in(grid, axes, u0);
  if (nodes.empty()) throw std::invalid_argument("smoothing: U0 contains no grid nodes");
  for (int nu : nus) {
    spectral::check_block_index(nu, grid, "build_smoothing_sequence");
    std::vector<ScalarField> comps;
    for (const auto& s : spectra) comps.push_back(s.partial_sum(nu, ch));
    VecField F(grid, axes, std::move(comps));
    seq.norms.push_back(field_norms(F, nodes));
    double err = 0.0;
    for (std::size_t k : nodes) err = std::max(err, distance(F.at(k), raw.at(k), X.dim));
    seq.c0_error.push_back(err);
    seq.fields.push_back(std::move(F));
    seq.nus.push_back(nu);
  }
  if (seq.nus.size() >= 2) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < seq.nus.size(); ++i) {
      x.push_back(seq.nus[i]);
      y.push_back(seq.norms[i].c1());
      if (seq.nus[i] > 0) seq.c1_constant = std::max(seq.c1_constant, seq.norms[i].c1() / seq.nus[i]);
    }
    seq.c1_fit = stats::fit_line(x, y);
  }
  return seq;
}

struct BracketReport {
  std::string pair_id;
  std::vector<int> nus;
  std::vector<double> bracket_sup;  // sup_{U0} |[X_nu, Y_nu]|
  std::vector<double> c1_x, c1_y;
  std::vector<double> weighted;     // bracket_sup * exp(t0 (c1_x + c1_y))
  double gamma = 0.5;
  double t0 = 0.05;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();  // log2 bracket_sup vs nu
  double threshold = 0.0;           // -gamma + 0.15
  bool vanished = false;
  bool slope_pass = false;
  bool weighted_decreasing = false;
  bool pass() const { return slope_pass && weighted_decreasing; }
};

inline BracketReport bracket_decay_report(const SmoothingSequence& X, const SmoothingSequence& Y, double gamma,
                                          double t0, double commuting_tol = 0.05,
                                          const std::string& pair_id = "") {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("bracket_decay_report: gamma must lie in (0,1)");
  if (X.nus != Y.nus || !(X.grid == Y.grid) || X.axes != Y.axes)
    throw std::invalid_argument("bracket_decay_report: sequences must share grid and nu list");
  BracketReport rep;
  rep.pair_id = pair_id.empty() ? X.label + "," + Y.label : pair_id;
  rep.gamma = gamma;
  rep.t0 = t0;
  rep.threshold = -gamma + 0.15;
  const auto nodes = nodes_in(X.grid, X.axes, X.u0);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < X.nus.size(); ++i) {
    const double b = sup_on(lie_bracket(X.fields[i], Y.fields[i]), nodes);
    rep.nus.push_back(X.nus[i]);
    rep.bracket_sup.push_back(b);
    rep.c1_x.push_back(X.norms[i].c1());
    rep.c1_y.push_back(Y.norms[i].c1());
    rep.weighted.push_back(b * std::exp(t0 * (X.norms[i].c1() + Y.norms[i].c1())));
    if (b >= 1e-13) x.push_back(X.nus[i]), y.push_back(std::log2(b));
  }
  if (!rep.bracket_sup.empty() && rep.bracket_sup.back() > commuting_tol)
    throw std::invalid_argument("bracket_decay_report: pair does not commute on the smoothed proxy (sup " +
                                std::to_string(rep.bracket_sup.back()) + " at finest nu)");
  if (x.size() >= 2) {
    rep.fitted_slope = stats::fit_line(x, y).slope;
    rep.slope_pass = rep.fitted_slope <= rep.threshold;
  } else if (x.empty()) {
    rep.vanished = true;
    rep.slope_pass = true;
  }
  rep.weighted_decreasing = true;
  for (std::size_t i = 1; i < rep.weighted.size(); ++i)
    if (rep.weighted[i] > rep.weighted[i - 1] && rep.weighted[i] > 1e-13) rep.weighted_decreasing = false;
  return rep;
}

// X_j = d/dx^j + sum_k b_j^k d/dy^k, built as A^{-1} Y pointwise.
struct CanonicalBasis {
  int r = 0, n = 0;
  Point base{0, 0, 0};
  Box box;                      // working box after shrinking
  std::vector<AnalyticVF> fields;
  double condition_at_base = 0.0;
  double min_det_ratio = 0.0;   // min_box |det A| / |det A(p)|
  int shrink_steps = 0;
  double base_misalignment = 0.0;  // max |b_j^k(p)|

  // b_j^k sampled on a grid: entry [j * (n - r) + k].
  std::vector<ScalarField> coefficient_grid(const GridSpec& g, const std::vector<int>& axes) const {
    std::vector<ScalarField> out;
    for (int j = 0; j < r; ++j) {
      const VecField s = sample_field(fields[j], g, axes);
      for (int k = r; k < n; ++k) out.push_back(s[k]);
    }
    return out;
  }
};

namespace detail {

inline Eigen::MatrixXd source_matrix(const std::vector<AnalyticVF>& Y, const Point& q) {
  const int r = static_cast<int>(Y.size()), n = Y[0].dim;
  Eigen::MatrixXd M(r, n);
  for (int j = 0; j < r; ++j) {
    const Point v = Y[j](q);
    for (int i = 0; i < n; ++i) M(j, i) = v[i];
  }
  return M;
}

inline double condition(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) == 0.0 ? std::numeric_limits<double>::infinity() : s(0) / s(s.size() - 1);
}

// Lattice of 9^n points of the box plus its corners.
inline std::vector<Point> probe_points(const Box& b) {
  std::vector<Point> pts;
  const int m = 9;
  int total = 1;
  for (int i = 0; i < b.dim; ++i) total *= m;
  for (int t = 0; t < total; ++t) {
    Point p{0, 0, 0};
    int rem = t;
    for (int i = 0; i < b.dim; ++i) {
      const int k = rem % m;
      rem /= m;
      p[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * k / (m - 1.0);
    }
    pts.push_back(p);
  }
  return pts;
}

}  // namespace detail

inline CanonicalBasis canonical_basis(const std::vector<AnalyticVF>& Y, const Point& p, const Box& box) {
  if (Y.empty()) throw std::invalid_argument("canonical_basis: no source fields");
  const int r = static_cast<int>(Y.size()), n = Y[0].dim;
  for (const auto& f : Y)
    if (f.dim != n) throw std::invalid_argument("canonical_basis: fields of different dimension");
  if (r > n) throw std::invalid_argument("canonical_basis: more fields than dimensions");
  CanonicalBasis cb;
  cb.r = r;
  cb.n = n;
  cb.base = p;
  const Eigen::MatrixXd Ap = detail::source_matrix(Y, p).leftCols(r);
  cb.condition_at_base = detail::condition(Ap);
  if (!(cb.condition_at_base < 1e6))
    throw std::runtime_error("subbundle not transverse to coordinate split (condition number " +
                             std::to_string(cb.condition_at_base) + "); apply a linear change of variables");
  const double det_p = std::abs(Ap.determinant());
  Box b = box;
  for (;;) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& q : detail::probe_points(b))
      worst = std::min(worst, std::abs(detail::source_matrix(Y, q).leftCols(r).determinant()));
    cb.min_det_ratio = worst / det_p;
    if (cb.min_det_ratio >= 0.1) break;
    if (cb.shrink_steps == 6)
      throw std::runtime_error("canonical_basis: leading matrix degenerates near the base point");
    for (int i = 0; i < b.dim; ++i) {
      b.lo[i] = p[i] - 0.5 * (p[i] - b.lo[i]);
      b.hi[i] = p[i] + 0.5 * (b.hi[i] - p[i]);
    }
    ++cb.shrink_steps;
  }
  cb.box = b;
  auto sources = std::make_shared<const std::vector<AnalyticVF>>(Y);
  for (int j = 0; j < r; ++j) {
    AnalyticVF X;
    X.label = "canonical" + std::to_string(j + 1);
    X.dim = n;
    X.box = b;
    X.eval = [sources, j, r, n](const Point& q) {
      const Eigen::MatrixXd M = detail::source_matrix(*sources, q);
      const Eigen::MatrixXd S = M.leftCols(r).partialPivLu().solve(M);
      Point v{0, 0, 0};
      for (int i = 0; i < n; ++i) v[i] = S(j, i);
      return v;
    };
    if (Y[j].claimed_modulus) X.claimed_modulus = Y[j].claimed_modulus;
    cb.fields.push_back(std::move(X));
  }
  for (int j = 0; j < r; ++j) {
    const Point v = cb.fields[j](p);
    for (int k = r; k < n; ++k) cb.base_misalignment = std::max(cb.base_misalignment, std::abs(v[k]));
  }
  return cb;
}

struct SpanDefect {
  ScalarField residual;
  double min_singular = std::numeric_limits<double>::infinity();
  std::size_t deficient_points = 0;
};

// Pointwise least-squares residual of the bracket against span(basis).
inline SpanDefect span_defect(const VecField& bracket, const std::vector<VecField>& basis) {
  if (basis.empty()) throw std::invalid_argument("span_defect: empty basis");
  for (const auto& b : basis)
    if (!b.compatible(bracket)) throw std::invalid_argument("span_defect: fields live on different grids");
  const GridSpec& g = bracket.grid();
  const int n = bracket.ambient_dim(), r = static_cast<int>(basis.size());
  SpanDefect out{ScalarField(g), std::numeric_limits<double>::infinity(), 0};
  Eigen::MatrixXd B(n, r);
  Eigen::VectorXd z(n);
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < n; ++i) B(i, j) = basis[j][i][k];
    for (int i = 0; i < n; ++i) z(i) = bracket[i][k];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    out.min_singular = std::min(out.min_singular, s(r - 1));
    if (!(s(r - 1) > 1e-10 * smax)) ++out.deficient_points;
    // Minimum-norm solution with singular values below 1e-10 relative dropped.
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(r);
    const Eigen::VectorXd proj = svd.matrixU().transpose() * z;
    for (int j = 0; j < r; ++j)
      if (s(j) > 1e-10 * smax) coef += svd.matrixV().col(j) * (proj(j) / s(j));
    out.residual[k] = (z - B * coef).norm();
  }
  if (out.deficient_points * 1000 > g.size())
    throw std::runtime_error("span_defect: basis rank-deficient at " + std::to_string(out.deficient_points) +
                             " grid points");
  return out;
}

struct CommutatorDefect {
  double measured = 0.0;  // sup_p |F_X^t F_Y^s F_X^-t (p) - F_Y^s (p)|
  std::optional<double> bound;
  double integrator_error = 0.0;  // accumulated step-halving estimates
  bool pass = true;
};

// Optional C^1 data enables the bound |ts| e^{|t| c1X + |s| c1Y} sup|[X,Y]|.
struct CommutatorBoundData {
  double c1_x = 0.0, c1_y = 0.0, bracket_sup = 0.0;
};

inline CommutatorDefect flow_commutator_defect(const AnalyticVF& X, const AnalyticVF& Y, double t, double s,
                                               const std::vector<Point>& seeds, const flow::FlowOptions& opts = {},
                                               std::optional<CommutatorBoundData> data = std::nullopt) {
  CommutatorDefect out;
  const auto a = flow::integrate_flow(X, -t, seeds, opts);
  const auto b = flow::integrate_flow(Y, s, a.endpoints, opts);
  const auto c = flow::integrate_flow(X, t, b.endpoints, opts);
  const auto d = flow::integrate_flow(Y, s, seeds, opts);
  out.integrator_error = a.richardson_error + b.richardson_error + c.richardson_error + d.richardson_error;
  for (std::size_t i = 0; i < seeds.size(); ++i)
    out.measured = std::max(out.measured, distance(c.endpoints[i], d.endpoints[i], X.dim));
  if (data) {
    out.bound = std::abs(t * s) * std::exp(std::abs(t) * data->c1_x + std::abs(s) * data->c1_y) * data->bracket_sup;
    out.pass = out.measured <= 1.05 * *out.bound;
  }
  return out;
}

}  // namespace rfrob::involutivity
