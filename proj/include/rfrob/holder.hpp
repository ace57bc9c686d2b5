// Hölder exponent estimates from oscillations over dyadic pair scales.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "rfrob/grid.hpp"
#include "rfrob/stats.hpp"

namespace rfrob {

struct HolderEstimate {
  double exponent = 0.0;
  double constant = 0.0;  // osc(h) ~ constant * h^exponent
  double r2 = 0.0;
  double scale_min = 0.0, scale_max = 0.0;
  std::vector<double> scales;
  std::vector<double> oscillations;
  int pairs_per_scale = 0;
};

// Fits log osc = log C + exponent log h by ordinary least squares.
inline HolderEstimate fit_holder(const std::vector<double>& scales, const std::vector<double>& osc,
                                 int pairs_per_scale) {
  if (scales.size() < 4) throw std::invalid_argument("holder_exponent: need at least 4 scales");
  if (pairs_per_scale < 100) throw std::invalid_argument("holder_exponent: need at least 100 pairs per scale");
  if (scales.size() != osc.size()) throw std::invalid_argument("holder_exponent: size mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(osc[i] > 0.0) || !std::isfinite(osc[i]))
      throw std::invalid_argument("holder_exponent: exponent undefined (map is constant at some scale)");
    x.push_back(std::log(scales[i]));
    y.push_back(std::log(osc[i]));
  }
  const auto fit = stats::fit_line(x, y);
  HolderEstimate est;
  est.exponent = fit.slope;
  est.constant = std::exp(fit.intercept);
  est.r2 = fit.r2;
  est.scales = scales;
  est.oscillations = osc;
  est.scale_min = *std::min_element(scales.begin(), scales.end());
  est.scale_max = *std::max_element(scales.begin(), scales.end());
  est.pairs_per_scale = pairs_per_scale;
  return est;
}

using PointMap = std::function<Point(const Point&)>;

// Dyadic scales 2^-k for k in [k_min, k_max].
inline std::vector<double> dyadic_scales(int k_min, int k_max) {
  std::vector<double> s;
  for (int k = k_max; k >= k_min; --k) s.push_back(std::ldexp(1.0, -k));
  return s;
}

// Oscillation of f at each scale h: max |f(x) - f(x + h e)| over pairs with
// x = center + h xi, xi in [-2, 2]^dim and unit directions e. The same (xi, e)
// set is used at every scale, together with the pairs center -/+ h e_a / 2.
inline HolderEstimate holder_exponent(const PointMap& f, int in_dim, int out_dim, const Point& center,
                                      const std::vector<double>& scales, int pairs_per_scale = 128,
                                      std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  std::normal_distribution<double> gauss;
  std::vector<Point> xi, dir;
  for (int a = 0; a < in_dim; ++a) {
    Point e{0, 0, 0};
    e[a] = 1.0;
    Point x{0, 0, 0};
    x[a] = -0.5;
    xi.push_back(x);
    dir.push_back(e);
  }
  while (static_cast<int>(xi.size()) < pairs_per_scale) {
    Point x{0, 0, 0}, e{0, 0, 0};
    for (int a = 0; a < in_dim; ++a) x[a] = unit(rng), e[a] = gauss(rng);
    const double n = norm(e, in_dim);
    if (n == 0.0) continue;
    for (int a = 0; a < in_dim; ++a) e[a] /= n;
    xi.push_back(x);
    dir.push_back(e);
  }
  std::vector<double> osc;
  for (double h : scales) {
    double m = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
      const Point p = axpy(h, xi[i], center);
      const Point q = axpy(h, dir[i], p);
      m = std::max(m, distance(f(p), f(q), out_dim));
    }
    osc.push_back(m);
  }
  return fit_holder(scales, osc, static_cast<int>(xi.size()));
}

}  // namespace rfrob
