// Moduli of continuity, the Osgood heuristic and the flow modulus.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rfrob/grid.hpp"

namespace rfrob::modulus {

class Modulus {
 public:
  Modulus() = default;
  Modulus(std::string label, std::function<double(double)> eval)
      : label_(std::move(label)), eval_(std::move(eval)) {}

  double operator()(double r) const { return eval_(r); }
  const std::string& label() const { return label_; }
  explicit operator bool() const { return static_cast<bool>(eval_); }

 private:
  std::string label_;
  std::function<double(double)> eval_;
};

inline Modulus lipschitz(double L) {
  if (!(L > 0.0)) throw std::invalid_argument("lipschitz: constant must be positive");
  return {"lip:" + std::to_string(L), [L](double r) { return L * r; }};
}

inline Modulus holder(double alpha, double C = 1.0) {
  if (!(alpha > 0.0 && alpha <= 1.0) || !(C > 0.0))
    throw std::invalid_argument("holder: need 0 < alpha <= 1 and C > 0");
  return {"holder:" + std::to_string(alpha) + ":" + std::to_string(C),
          [alpha, C](double r) { return C * std::pow(r, alpha); }};
}

// r log(1/r) up to 1/e, then constant.
inline Modulus log_lipschitz() {
  return {"loglip", [](double r) { return r <= 1.0 / M_E ? r * std::log(1.0 / r) : 1.0 / M_E; }};
}

// r log^2(1/r) up to e^-2, then constant. Above e^-2 the expression itself
// decreases, so the constant continuation keeps the modulus monotone.
inline Modulus rlog2() {
  const double knee = std::exp(-2.0);
  return {"rlog2", [knee](double r) {
            if (r >= knee) return 4.0 * knee;
            const double l = std::log(1.0 / r);
            return r * l * l;
          }};
}

inline Modulus identity_plus(const Modulus& m) {
  return {"idplus:" + m.label(), [m](double r) { return r + m(r); }};
}

inline Modulus scaled(double c, const Modulus& m) {
  if (!(c > 0.0)) throw std::invalid_argument("scaled: factor must be positive");
  return {"scaled:" + std::to_string(c) + ":" + m.label(), [c, m](double r) { return c * m(r); }};
}

// Upper concave envelope through the origin of the points (x_i, y_i), x_i > 0.
// Returned as hull vertices starting at (0, 0).
inline std::vector<std::pair<double, double>> concave_hull(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> hull{{0.0, 0.0}};
  for (const auto& p : pts) {
    if (p.first <= 0.0) continue;
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
      if (cross >= 0.0) hull.pop_back();
      else break;
    }
    if (hull.back().first == p.first) hull.back().second = std::max(hull.back().second, p.second);
    else hull.push_back(p);
  }
  // Enforce nondecreasing: drop the descending tail.
  while (hull.size() >= 2 && hull.back().second < hull[hull.size() - 2].second) hull.pop_back();
  return hull;
}

// Piecewise-linear modulus through the concave envelope of the points,
// constant beyond the last vertex.
inline Modulus tabulated(const std::vector<std::pair<double, double>>& pts, std::string label = "table") {
  auto hull = std::make_shared<const std::vector<std::pair<double, double>>>(concave_hull(pts));
  return {std::move(label), [hull](double r) {
            const auto& h = *hull;
            if (r <= 0.0) return 0.0;
            if (r >= h.back().first) return h.back().second;
            auto it = std::upper_bound(h.begin(), h.end(), r,
                                       [](double v, const std::pair<double, double>& p) { return v < p.first; });
            const auto& b = *it;
            const auto& a = *(it - 1);
            return a.second + (b.second - a.second) * (r - a.first) / (b.first - a.first);
          }};
}

// ∫_a^b ds / eta(s) for 0 < a <= b, integrated in u = log s on unit panels.
inline double inverse_integral(const Modulus& m, double a, double b) {
  if (!(a > 0.0) || b < a) throw std::out_of_range("inverse_integral: need 0 < a <= b");
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [&m](double u) {
    const double s = std::exp(u);
    return s / m(s);
  };
  const double ua = std::log(a), ub = std::log(b);
  double total = 0.0;
  double lo = ua;
  while (lo < ub) {
    double hi = std::min(ub, std::floor(lo) + 1.0);
    if (hi <= lo) hi = std::min(ub, lo + 1.0);
    total += gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 10, 1e-12);
    lo = hi;
  }
  return total;
}

// 2 sup_{t<=r} eta(t) sqrt(∫_t^1 ds/eta), tabulated on log-spaced points and
// replaced by its concave envelope.
inline Modulus zeta(const Modulus& m) {
  std::vector<std::pair<double, double>> pts;
  double running = 0.0;
  const int n = 240;
  for (int i = 0; i <= n; ++i) {
    const double t = std::pow(10.0, -14.0 + 14.0 * i / n);
    const double tail = t < 1.0 ? inverse_integral(m, t, 1.0) : 0.0;
    running = std::max(running, m(t) * std::sqrt(tail));
    pts.emplace_back(t, 2.0 * running);
  }
  pts.emplace_back(2.0, 2.0 * running);
  return tabulated(pts, "zeta:" + m.label());
}

struct InvariantReport {
  bool positive = true;
  bool nondecreasing = true;
  bool concave = true;
  bool vanishes_at_zero = true;
  bool ok() const { return positive && nondecreasing && concave && vanishes_at_zero; }
};

// Checks the modulus invariants on 64 log-spaced points in [1e-10, 10].
inline InvariantReport check_invariants(const Modulus& m, bool allow_zero = false) {
  InvariantReport rep;
  std::vector<double> r(64), v(64);
  for (int i = 0; i < 64; ++i) {
    r[i] = std::pow(10.0, -10.0 + 11.0 * i / 63.0);
    v[i] = m(r[i]);
    if (!(v[i] > 0.0) && !(allow_zero && v[i] == 0.0)) rep.positive = false;
  }
  const double scale = std::max(1.0, std::abs(v.back()));
  for (int i = 1; i < 64; ++i)
    if (v[i] < v[i - 1] - 1e-12 * scale) rep.nondecreasing = false;
  // Concavity with the origin as first node: chord slopes must not increase.
  double prev_slope = v[0] / r[0];
  for (int i = 1; i < 64; ++i) {
    const double slope = (v[i] - v[i - 1]) / (r[i] - r[i - 1]);
    if (slope > prev_slope * (1.0 + 1e-9) + 1e-12) rep.concave = false;
    prev_slope = slope;
  }
  rep.vanishes_at_zero = m(1e-12) <= 1e-3 * std::max(m(1.0), 1e-300) || m(1e-12) == 0.0;
  return rep;
}

struct OsgoodDiagnostic {
  bool osgood = false;
  bool low_confidence = false;
  std::string reason;
  std::vector<double> eps;        // 1e-3 .. 1e-12
  std::vector<double> integral;   // ∫_eps^1 dr/eta
  double decay_exponent = 0.0;    // local power-law decay of decade increments
};

// Heuristic test of ∫_0 dr/eta = ∞ from the growth of ∫_eps^1 dr/eta over
// eps = 10^-3 .. 10^-12. The decade increments of a divergent integral decay
// at most like 1/k (k = decade index); faster decay means a finite limit.
inline OsgoodDiagnostic is_osgood_heuristic(const Modulus& m) {
  OsgoodDiagnostic d;
  try {
    for (int k = 3; k <= 12; ++k) {
      const double e = std::pow(10.0, -k);
      d.eps.push_back(e);
      d.integral.push_back(inverse_integral(m, e, 1.0));
    }
  } catch (const std::exception& ex) {
    d.low_confidence = true;
    d.reason = std::string("quadrature failed: ") + ex.what();
    return d;
  }
  std::vector<double> inc;
  for (std::size_t i = 1; i < d.integral.size(); ++i) inc.push_back(d.integral[i] - d.integral[i - 1]);
  for (double x : d.integral)
    if (!std::isfinite(x)) {
      d.low_confidence = true;
      d.reason = "non-finite integral";
      return d;
    }
  const double last = inc.back();
  if (!(last > 1e-6 * std::abs(d.integral.back()))) {
    d.reason = "plateau";
    return d;
  }
  // Local exponent p from log(inc) ~ -p log(k) over the last four decades.
  const std::size_t n = inc.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int w = 4;
  for (std::size_t i = n - w; i < n; ++i) {
    const double x = std::log(static_cast<double>(i + 4));  // decade index k of inc[i]
    const double y = std::log(inc[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  d.decay_exponent = -(w * sxy - sx * sy) / (w * sxx - sx * sx);
  d.osgood = d.decay_exponent <= 1.25;
  d.low_confidence = d.decay_exponent > 0.75 && d.decay_exponent < 1.5;
  d.reason = d.osgood ? "increments decay no faster than 1/k" : "increments decay faster than 1/k";
  return d;
}

// eta^F(t, r): the R >= r with ∫_r^R ds/eta(s) = t.
inline double flow_modulus(const Modulus& m, double t, double r) {
  if (!(r > 0.0)) throw std::out_of_range("flow_modulus: r must be positive");
  if (!(t >= 0.0)) throw std::out_of_range("flow_modulus: t must be nonnegative");
  if (t == 0.0) return r;
  constexpr double kCeiling = 1e12;
  auto speed = [&m](double u) {
    const double s = std::exp(u);
    return s / m(s);
  };
  // Bracket in u = log R, integrating panel by panel from log r.
  double u_lo = std::log(r), g_lo = 0.0;
  double step = 0.5;
  double u_hi = u_lo, g_hi = 0.0;
  for (;;) {
    u_hi = u_lo + step;
    if (u_hi > std::log(kCeiling)) throw std::runtime_error("flow modulus diverged");
    const double g = g_lo + inverse_integral(m, std::exp(u_lo), std::exp(u_hi));
    if (g >= t) {
      g_hi = g;
      break;
    }
    u_lo = u_hi, g_lo = g;
    step *= 2.0;
  }
  // Safeguarded Newton on G(u) - t with G' = e^u / eta(e^u).
  double u = u_lo + (t - g_lo) / (g_hi - g_lo) * (u_hi - u_lo);
  for (int it = 0; it < 100; ++it) {
    const double g = g_lo + inverse_integral(m, std::exp(u_lo), std::exp(u));
    const double f = g - t;
    if (std::abs(f) <= 4e-16 * t) return std::exp(u);
    if (f < 0.0) u_lo = u, g_lo = g;
    else u_hi = u, g_hi = g;
    double next = u - f / speed(u);
    if (!(next > u_lo && next < u_hi)) next = 0.5 * (u_lo + u_hi);
    const double scale = std::max(1.0, std::abs(u));
    if (std::abs(next - u) < 1e-14 * scale || u_hi - u_lo < 8e-16 * scale) return std::exp(next);
    u = next;
  }
  return std::exp(u);
}

// Relative gap between eta^F for scaled(c, m) at t and for m at c t.
inline double flow_modulus_scaling_check(const Modulus& m, double c, double t, double r) {
  const double ref = flow_modulus(m, c * t, r);
  return std::abs(flow_modulus(scaled(c, m), t, r) - ref) / ref;
}

// Relative gap between eta^F(t, eta^F(s, r)) and eta^F(t + s, r).
inline double flow_modulus_semigroup_check(const Modulus& m, double t, double s, double r) {
  const double ref = flow_modulus(m, t + s, r);
  return std::abs(flow_modulus(m, t, flow_modulus(m, s, r)) - ref) / ref;
}

// Relative residual of eta^F(t, r) = r + ∫_0^t eta(eta^F(s, r)) ds, with the
// s-integral done by an independent Gauss-Kronrod rule.
inline double flow_modulus_integral_residual(const Modulus& m, double t, double r) {
  using boost::math::quadrature::gauss_kronrod;
  const double lhs = flow_modulus(m, t, r);
  const double integral = gauss_kronrod<double, 21>::integrate(
      [&](double s) { return m(flow_modulus(m, s, r)); }, 0.0, t, 5, 1e-12);
  return std::abs(lhs - r - integral) / lhs;
}

// Thread-safe cache of eta^F values.
class FlowModulusTable {
 public:
  explicit FlowModulusTable(Modulus base) : base_(std::move(base)) {}

  const Modulus& base() const { return base_; }

  double operator()(double t, double r) const {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = entries_.find({t, r});
      if (it != entries_.end()) return it->second;
    }
    const double v = flow_modulus(base_, t, r);
    std::lock_guard<std::mutex> lock(mu_);
    entries_.emplace(std::make_pair(t, r), v);
    return v;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
  }

 private:
  Modulus base_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<double, double>, double> entries_;
};

struct Sample {
  Point x{0, 0, 0};
  double value = 0.0;
};

// Concave majorant of rho -> sup_{|x-y|<=rho} |f(x)-f(y)| at the given scales.
inline Modulus empirical_modulus(const std::vector<Sample>& samples, const std::vector<double>& scales) {
  if (samples.size() < 2) throw std::invalid_argument("empirical_modulus: at least two samples required");
  if (scales.empty() || !std::is_sorted(scales.begin(), scales.end()) || !(scales.front() > 0.0))
    throw std::invalid_argument("empirical_modulus: scales must be positive and ascending");
  std::vector<double> osc(scales.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double d = distance(samples[i].x, samples[j].x, kMaxDim);
      const double dv = std::abs(samples[i].value - samples[j].value);
      auto it = std::lower_bound(scales.begin(), scales.end(), d);
      for (auto k = static_cast<std::size_t>(it - scales.begin()); k < scales.size(); ++k) {
        if (dv <= osc[k]) break;
        osc[k] = dv;
      }
    }
  }
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < scales.size(); ++k) pts.emplace_back(scales[k], osc[k]);
  return tabulated(pts, "empirical");
}

// Reads (rho, eta) pairs, one per line, comma separated; '#' starts a comment
// and a non-numeric first line is skipped as a header.
inline Modulus load_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open modulus table " + path);
  std::vector<std::pair<double, double>> pts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a, b;
    if (ss >> a >> b) pts.emplace_back(a, b);
    else if (!first && line.find_first_not_of(" \t\r") != std::string::npos)
      throw std::runtime_error(path + ": malformed modulus row '" + line + "'");
    first = false;
  }
  if (pts.size() < 2) throw std::runtime_error(path + ": need at least two rows");
  return tabulated(pts, "table:" + path);
}

// Catalog ids: loglip, rlog2, lip:L, holder:alpha[:C], scaled:c:<id>,
// idplus:<id>, zeta:<id>, table:<csv path>.
inline Modulus from_id(const std::string& id) {
  auto rest_after = [&](std::size_t n) { return id.substr(n); };
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw std::invalid_argument("modulus id '" + id + "': bad number '" + s + "'");
    return v;
  };
  if (id == "loglip") return log_lipschitz();
  if (id == "rlog2") return rlog2();
  if (id.rfind("lip:", 0) == 0) return lipschitz(num(rest_after(4)));
  if (id.rfind("holder:", 0) == 0) {
    const std::string r = rest_after(7);
    const auto c = r.find(':');
    if (c == std::string::npos) return holder(num(r));
    return holder(num(r.substr(0, c)), num(r.substr(c + 1)));
  }
  if (id.rfind("scaled:", 0) == 0) {
    const std::string r = rest_after(7);
    const auto c = r.find(':');
    if (c == std::string::npos) throw std::invalid_argument("modulus id '" + id + "': expected scaled:c:<id>");
    return scaled(num(r.substr(0, c)), from_id(r.substr(c + 1)));
  }
  if (id.rfind("idplus:", 0) == 0) return identity_plus(from_id(rest_after(7)));
  if (id.rfind("zeta:", 0) == 0) return zeta(from_id(rest_after(5)));
  if (id.rfind("table:", 0) == 0) return load_table_csv(rest_after(6));
  throw std::invalid_argument("unknown modulus id '" + id + "'");
}

}  // namespace rfrob::modulus
