// Ordinary least squares on a line.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rfrob::stats {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

// Least squares y ~ c x through the origin; r2 is the uncentered one.
inline LinearFit fit_proportional(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit_proportional: need paired points");
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxx += x[i] * x[i], sxy += x[i] * y[i], syy += y[i] * y[i];
  if (sxx == 0.0) throw std::invalid_argument("fit_proportional: zero abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  double res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) res += (y[i] - f.slope * x[i]) * (y[i] - f.slope * x[i]);
  f.r2 = syy == 0.0 ? 1.0 : 1.0 - res / syy;
  return f;
}

}  // namespace rfrob::stats
