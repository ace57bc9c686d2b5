// Littlewood-Paley machinery on periodic grids.
//
// Frequencies are integer wavenumber magnitudes |k| scaled by 1/box_side.
// Block j >= 1 multiplies by profile(2^-j |k|); block 0 by
// 1 - sum_{j>=1} profile(2^-j |k|). The top usable block is
// j_max = floor(log2(N/2)) - 1, so every block up to j_max is fully resolved
// and all wavenumbers up to N/4 are covered by the partition.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfrob/fft.hpp"
#include "rfrob/grid.hpp"

namespace rfrob::spectral {

using fft::Complex;

class LPChar {
 public:
  // exp(1 - 1/(1 - s^2)) on (-1, 1), zero outside; equals 1 at s = 0.
  static double bump(double s) {
    if (!(std::abs(s) < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
  }

  // Normalized radial profile, supported in (1/2, 2).
  double profile(double rho) const { return profile_log2(rho > 0.0 ? std::log2(rho) : -INFINITY); }

  // Multiplier of block j at frequency magnitude rho. Valid for any j >= 0,
  // including blocks above j_max (used internally by the paraproduct sums).
  double block_multiplier(int j, double rho) const {
    if (j < 0) return 0.0;
    if (j == 0) {
      if (rho <= 1.0) return 1.0;
      if (rho >= 2.0) return 0.0;
      return 1.0 - profile_log2(std::log2(rho) - 1.0);
    }
    if (rho <= 0.0) return 0.0;
    return profile_log2(std::log2(rho) - j);
  }

  // Multiplier of S_nu = P_0 + ... + P_nu; S_nu = 0 for nu < 0.
  double partial_multiplier(int nu, double rho) const {
    if (nu < 0) return 0.0;
    const double lo = std::ldexp(1.0, nu);
    if (rho <= lo) return 1.0;
    if (rho >= 2.0 * lo) return 0.0;
    return 1.0 - profile_log2(std::log2(rho) - (nu + 1));
  }

  static int j_max(const GridSpec& grid) {
    return static_cast<int>(std::floor(std::log2(grid.points_per_axis / 2.0))) - 1;
  }

 private:
  // profile evaluated at rho = 2^s. The dyadic shifts of the bump that cover
  // s are the ones centred at floor(s) and floor(s)+1, so the normalizing sum
  // has exactly two terms.
  static double profile_log2(double s) {
    if (!(s > -1.0 && s < 1.0)) return 0.0;
    const double a = s - std::floor(s);
    return bump(s) / (bump(a) + bump(a - 1.0));
  }
};

inline LPChar make_lp_char() { return LPChar{}; }

// Fourier coefficients of a field together with the frequency magnitude of
// every coefficient.
class Spectrum {
 public:
  explicit Spectrum(const ScalarField& f) : grid_(f.grid()), coeffs_(f.size()), rho_(f.size()) {
    for (std::size_t i = 0; i < f.size(); ++i) coeffs_[i] = f[i];
    fft::forward(grid_, coeffs_);
    for (std::size_t i = 0; i < rho_.size(); ++i) rho_[i] = magnitude(i);
  }

  const GridSpec& grid() const { return grid_; }
  const std::vector<Complex>& coefficients() const { return coeffs_; }
  double rho(std::size_t i) const { return rho_[i]; }

  // Inverse transform after multiplying each coefficient by m(rho).
  template <class Multiplier>
  ScalarField filtered(Multiplier&& m) const {
    std::vector<Complex> work(coeffs_.size());
    for (std::size_t i = 0; i < work.size(); ++i) work[i] = coeffs_[i] * m(rho_[i]);
    return to_field(std::move(work));
  }

  ScalarField block(int j, const LPChar& ch) const {
    return filtered([&](double r) { return ch.block_multiplier(j, r); });
  }
  ScalarField partial_sum(int nu, const LPChar& ch) const {
    return filtered([&](double r) { return ch.partial_multiplier(nu, r); });
  }

  // Spectral derivative along a grid axis; the Nyquist mode is dropped so the
  // result stays real.
  ScalarField derivative(int axis) const {
    const int n = grid_.points_per_axis;
    const double factor = 2.0 * M_PI / grid_.box_side;
    std::vector<Complex> work(coeffs_.size());
    for (std::size_t i = 0; i < work.size(); ++i) {
      const int idx = grid_.unflatten(i)[axis];
      const int k = (idx == n / 2) ? 0 : grid_.wavenumber(idx);
      work[i] = coeffs_[i] * Complex(0.0, factor * k);
    }
    return to_field(std::move(work));
  }

  // Largest per-axis |k| among coefficients above rel_tol * max |coefficient|.
  int bandwidth(double rel_tol = 1e-12) const {
    double cmax = 0.0;
    for (const auto& c : coeffs_) cmax = std::max(cmax, std::abs(c));
    int band = 0;
    if (cmax == 0.0) return 0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      if (std::abs(coeffs_[i]) <= rel_tol * cmax) continue;
      auto idx = grid_.unflatten(i);
      for (int a = 0; a < grid_.dim; ++a) band = std::max(band, std::abs(grid_.wavenumber(idx[a])));
    }
    return band;
  }

  // Largest frequency magnitude present on the grid.
  double max_rho() const {
    double m = 0.0;
    for (double r : rho_) m = std::max(m, r);
    return m;
  }

 private:
  double magnitude(std::size_t flat) const {
    auto idx = grid_.unflatten(flat);
    double s = 0.0;
    for (int a = 0; a < grid_.dim; ++a) {
      const double k = grid_.wavenumber(idx[a]);
      s += k * k;
    }
    return std::sqrt(s) / grid_.box_side;
  }

  ScalarField to_field(std::vector<Complex> work) const {
    fft::inverse(grid_, work);
    std::vector<double> v(work.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = work[i].real();
    return ScalarField(grid_, std::move(v));
  }

  GridSpec grid_;
  std::vector<Complex> coeffs_;
  std::vector<double> rho_;
};

inline void check_block_index(int j, const GridSpec& grid, const char* what) {
  const int jmax = LPChar::j_max(grid);
  if (j < 0 || j > jmax)
    throw std::out_of_range(std::string(what) + ": index " + std::to_string(j) + " outside [0, " +
                            std::to_string(jmax) + "]");
}

// P_j f.
inline ScalarField lp_block(const ScalarField& f, int j, const LPChar& ch) {
  check_block_index(j, f.grid(), "lp_block");
  return Spectrum(f).block(j, ch);
}

// S_nu f = sum_{k <= nu} P_k f.
inline ScalarField lp_partial_sum(const ScalarField& f, int nu, const LPChar& ch) {
  check_block_index(nu, f.grid(), "lp_partial_sum");
  return Spectrum(f).partial_sum(nu, ch);
}

struct HZNorm {
  int m = 0;
  double alpha = 0.5;
  double value = 0.0;
  std::vector<double> per_block;  // 2^{j(m+alpha)} max|P_j f|, j = 0..j_max
};

inline HZNorm hz_norm_from(const Spectrum& spec, int m, double alpha, const LPChar& ch) {
  if (m < -1 || m > 1) throw std::invalid_argument("hz_norm: m must be -1, 0 or 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("hz_norm: alpha must lie in (0,1)");
  HZNorm out{m, alpha, 0.0, {}};
  const int jmax = LPChar::j_max(spec.grid());
  for (int j = 0; j <= jmax; ++j) {
    const double w = std::exp2(j * (m + alpha)) * spec.block(j, ch).sup_norm();
    out.per_block.push_back(w);
    out.value = std::max(out.value, w);
  }
  return out;
}

// Grid version of sup_j 2^{j(m+alpha)} ||P_j f||_inf (a lower bound of the
// continuum norm: the sup over x is taken on nodes only).
inline HZNorm hz_norm(const ScalarField& f, int m, double alpha, const LPChar& ch) {
  return hz_norm_from(Spectrum(f), m, alpha, ch);
}

// Direct Hölder quotient sup|f| + sup_h h^-alpha max_x |f(x + h e_a) - f(x)|
// over dyadic grid shifts h and axes a. Comparable to hz_norm(f, 0, alpha).
inline double holder_quotient(const ScalarField& f, double alpha) {
  const auto& g = f.grid();
  const int n = g.points_per_axis;
  double best = 0.0;
  for (int shift = 1; shift <= n / 2; shift *= 2) {
    const double h = shift * g.spacing();
    double osc = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        auto idx = g.unflatten(i);
        idx[a] = (idx[a] + shift) % n;
        osc = std::max(osc, std::abs(f[g.flatten(idx)] - f[i]));
      }
    }
    best = std::max(best, osc / std::pow(h, alpha));
  }
  return f.sup_norm() + best;
}

// C-infinity radial step: 1 for r <= inner, 0 for r >= outer.
inline double smooth_step(double r, double inner, double outer) {
  if (r <= inner) return 1.0;
  if (r >= outer) return 0.0;
  auto e = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double tau = (r - inner) / (outer - inner);
  return e(1.0 - tau) / (e(1.0 - tau) + e(tau));
}

// Distance on the torus between grid-axis points.
inline double torus_distance(const Point& a, const Point& b, const GridSpec& g) {
  double s = 0.0;
  for (int i = 0; i < g.dim; ++i) {
    double d = std::abs(a[i] - b[i]);
    d = std::fmod(d, g.box_side);
    d = std::min(d, g.box_side - d);
    s += d * d;
  }
  return std::sqrt(s);
}

inline void check_cutoff_radii(const GridSpec& g, double inner, double outer) {
  if (!(inner > 0.0 && inner < outer && outer < 0.5 * g.box_side))
    throw std::out_of_range("apply_cutoff: need 0 < inner < outer < box_side/2");
}

inline ScalarField cutoff_field(const GridSpec& g, const Point& center, double inner, double outer) {
  check_cutoff_radii(g, inner, outer);
  return ScalarField::sample(g, [&](const Point& p) {
    return smooth_step(torus_distance(p, center, g), inner, outer);
  });
}

// f multiplied by the radial bump around `center` (grid-axis coordinates).
inline ScalarField apply_cutoff(const ScalarField& f, const Point& center, double inner, double outer) {
  return f * cutoff_field(f.grid(), center, inner, outer);
}

// Random trigonometric polynomial with per-axis |k| <= bandwidth and
// coefficients ~ N(0, 1) / (1 + |k|).
inline ScalarField random_band_limited(const GridSpec& g, int bandwidth, std::uint64_t seed) {
  if (bandwidth < 0 || 2 * bandwidth >= g.points_per_axis)
    throw std::out_of_range("random_band_limited: bandwidth must be below N/2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Complex> c(g.size(), Complex(0.0, 0.0));
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto idx = g.unflatten(i);
    double k2 = 0.0;
    bool inside = true;
    for (int a = 0; a < g.dim; ++a) {
      const int k = g.wavenumber(idx[a]);
      inside = inside && std::abs(k) <= bandwidth && 2 * std::abs(k) != g.points_per_axis;
      k2 += double(k) * k;
    }
    const double re = gauss(rng), im = gauss(rng);
    if (inside) c[i] = Complex(re, im) / (1.0 + std::sqrt(k2));
  }
  fft::inverse(g, c);
  // Real part of a random complex polynomial is again band-limited.
  std::vector<double> v(c.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c[i].real() * static_cast<double>(g.size());
  return ScalarField(g, std::move(v));
}

// ||sum_{j <= j_max} P_j f - f||_inf, each block filtered separately.
inline double reconstruction_residual(const ScalarField& f, const LPChar& ch) {
  const Spectrum s(f);
  ScalarField acc(f.grid());
  for (int j = 0; j <= LPChar::j_max(f.grid()); ++j) acc += s.block(j, ch);
  return sup_distance(acc, f);
}

}  // namespace rfrob::spectral
