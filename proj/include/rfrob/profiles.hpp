// Scalar profiles of one variable used by the field catalog, with exact
// derivatives. Singular points take the value 0.
#pragma once

#include <cmath>

namespace rfrob::profiles {

// y log|y|.
inline double ylogy(double y) { return y == 0.0 ? 0.0 : y * std::log(std::abs(y)); }
inline double ylogy_d(double y) { return y == 0.0 ? 0.0 : std::log(std::abs(y)) + 1.0; }

// C-infinity step from 1 (|y| <= inner) to 0 (|y| >= outer) and its derivative.
inline double step(double y, double inner, double outer) {
  const double r = std::abs(y);
  if (r <= inner) return 1.0;
  if (r >= outer) return 0.0;
  const double tau = (r - inner) / (outer - inner);
  const double a = std::exp(-1.0 / (1.0 - tau)), b = std::exp(-1.0 / tau);
  return a / (a + b);
}
inline double step_d(double y, double inner, double outer) {
  const double r = std::abs(y);
  if (r <= inner || r >= outer) return 0.0;
  const double w = outer - inner;
  const double tau = (r - inner) / w;
  const double a = std::exp(-1.0 / (1.0 - tau)), b = std::exp(-1.0 / tau);
  const double da = -a / ((1.0 - tau) * (1.0 - tau));
  const double db = b / (tau * tau);
  const double ds = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b)) / w;
  return y > 0 ? ds : -ds;
}

// One-sided log-Lipschitz bumps: y log(1/y) on y > 0 (resp. |y| log(1/|y|) on
// y < 0), cut off smoothly. Their supports meet only at 0.
struct OneSided {
  double inner = 0.1, outer = 0.2;
  bool positive_side = true;

  double operator()(double y) const {
    if (positive_side ? !(y > 0.0) : !(y < 0.0)) return 0.0;
    const double r = std::abs(y);
    return step(y, inner, outer) * r * std::log(1.0 / r);
  }
  double derivative(double y) const {
    if (positive_side ? !(y > 0.0) : !(y < 0.0)) return 0.0;
    const double r = std::abs(y);
    const double core = r * std::log(1.0 / r);
    const double core_d = (std::log(1.0 / r) - 1.0) * (y > 0 ? 1.0 : -1.0);
    return step_d(y, inner, outer) * core + step(y, inner, outer) * core_d;
  }
};

}  // namespace rfrob::profiles
