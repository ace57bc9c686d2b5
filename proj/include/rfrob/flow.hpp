// Flows of vector fields by fixed-step RK4 with step-halving error estimates,
// modulus certificates, continuous dependence and pushforward bounds.
#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rfrob/modulus.hpp"
#include "rfrob/vector_field.hpp"

namespace rfrob::flow {

class FlowDomainError : public std::runtime_error {
 public:
  FlowDomainError(std::size_t seed_index, const Point& seed, double time, int dim)
      : std::runtime_error(describe(seed_index, seed, time, dim)), seed_index_(seed_index), seed_(seed) {}
  std::size_t seed_index() const { return seed_index_; }
  const Point& seed() const { return seed_; }

 private:
  static std::string describe(std::size_t i, const Point& p, double time, int dim) {
    std::ostringstream os;
    os.precision(17);
    os << "seed #" << i << " (";
    for (int k = 0; k < dim; ++k) os << (k ? ", " : "") << p[k];
    os << ") left flow domain at time " << time;
    return os.str();
  }
  std::size_t seed_index_;
  Point seed_;
};

struct FlowOptions {
  double step = 0.0;       // 0 selects 1e-4 |t|
  double tolerance = 0.0;  // > 0: require richardson_error <= tolerance
};

// RK4 with n equal steps from p over time t. Leaving the box throws.
inline Point rk4(const AnalyticVF& X, const Point& p, double t, long n, std::size_t seed_index = 0) {
  const int d = X.dim;
  const double h = t / static_cast<double>(n);
  Point x = p;
  auto shift = [d](const Point& a, double c, const Point& k) {
    Point r = a;
    for (int i = 0; i < d; ++i) r[i] += c * k[i];
    return r;
  };
  if (!X.box.contains(x)) throw FlowDomainError(seed_index, p, 0.0, d);
  for (long s = 0; s < n; ++s) {
    const Point k1 = X(x);
    const Point k2 = X(shift(x, 0.5 * h, k1));
    const Point k3 = X(shift(x, 0.5 * h, k2));
    const Point k4 = X(shift(x, h, k3));
    for (int i = 0; i < d; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!X.box.contains(x)) throw FlowDomainError(seed_index, p, (s + 1) * h, d);
  }
  return x;
}

inline long step_count(double t, double step) {
  if (t == 0.0) return 0;
  const double h = step > 0.0 ? step : 1e-4 * std::abs(t);
  return std::max(1L, static_cast<long>(std::ceil(std::abs(t) / h - 1e-9)));
}

// F_X^t(p) from a single run (no error estimate).
inline Point flow_point(const AnalyticVF& X, double t, const Point& p, double step = 0.0) {
  const long n = step_count(t, step);
  return n == 0 ? p : rk4(X, p, t, n);
}

struct PairCert {
  Point u{0, 0, 0}, v{0, 0, 0};
  double distance = 0.0;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct FlowCertificate {
  std::string field;
  double t = 0.0;
  double step = 0.0;
  std::vector<Point> seeds;
  std::vector<Point> endpoints;
  double richardson_error = 0.0;
  double seminorm_used = 0.0;
  double safety = 1.05;
  std::vector<PairCert> pairs;

  bool pass() const {
    for (const auto& p : pairs)
      if (!p.pass) return false;
    return true;
  }
};

// Runs every seed with n and 2n steps; endpoints come from the finer run.
inline FlowCertificate integrate_flow(const AnalyticVF& X, double t, const std::vector<Point>& seeds,
                                      const FlowOptions& opts = {}) {
  FlowCertificate cert;
  cert.field = X.label;
  cert.t = t;
  cert.seeds = seeds;
  const long n = step_count(t, opts.step);
  cert.step = n == 0 ? 0.0 : std::abs(t) / (2.0 * n);
  cert.endpoints.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (n == 0) {
      if (!X.box.contains(seeds[i])) throw FlowDomainError(i, seeds[i], 0.0, X.dim);
      cert.endpoints.push_back(seeds[i]);
      continue;
    }
    const Point coarse = rk4(X, seeds[i], t, n, i);
    const Point fine = rk4(X, seeds[i], t, 2 * n, i);
    cert.richardson_error = std::max(cert.richardson_error, distance(coarse, fine, X.dim));
    cert.endpoints.push_back(fine);
  }
  if (opts.tolerance > 0.0 && cert.richardson_error > opts.tolerance) {
    std::ostringstream os;
    os << "step too coarse: richardson error " << cert.richardson_error << " exceeds tolerance " << opts.tolerance;
    throw std::runtime_error(os.str());
  }
  return cert;
}

// The constant C in |X(u)-X(v)| <= C eta(|u-v|): the claimed one if present,
// otherwise 1.05 times a sampled estimate.
inline double seminorm_for_certificate(const AnalyticVF& X) {
  if (!X.claimed_modulus) throw std::invalid_argument(X.label + ": certificate needs a claimed modulus");
  if (X.claimed_seminorm) return *X.claimed_seminorm;
  return 1.05 * estimate_ceta(X, *X.claimed_modulus).seminorm;
}

// eta^F(c |t|, r), i.e. the flow modulus of c eta at |t|.
inline double certificate_bound(const modulus::Modulus& eta, double c, double t, double r) {
  if (c == 0.0 || t == 0.0) return r;
  return modulus::flow_modulus(eta, c * std::abs(t), r);
}

inline FlowCertificate certify_flow_regularity(const AnalyticVF& X, double t,
                                               const std::vector<std::pair<Point, Point>>& pairs,
                                               const FlowOptions& opts = {}, double safety = 1.05) {
  const double c = seminorm_for_certificate(X);
  std::vector<Point> seeds;
  seeds.reserve(2 * pairs.size());
  for (const auto& [u, v] : pairs) seeds.push_back(u), seeds.push_back(v);
  FlowCertificate cert = integrate_flow(X, t, seeds, opts);
  cert.seminorm_used = c;
  cert.safety = safety;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairCert pc;
    pc.u = pairs[i].first;
    pc.v = pairs[i].second;
    pc.distance = distance(pc.u, pc.v, X.dim);
    pc.measured = distance(cert.endpoints[2 * i], cert.endpoints[2 * i + 1], X.dim);
    pc.bound = certificate_bound(*X.claimed_modulus, c, t, pc.distance);
    pc.pass = pc.measured <= safety * pc.bound;
    cert.pairs.push_back(pc);
  }
  return cert;
}

struct PerturbationResult {
  double measured = 0.0;  // sup over seeds of |F_X^t - F_Y^t|
  double bound = 0.0;     // (id + eta)^F(c |t|, delta)
  double scale = 0.0;     // c = max(||X||, ||Y||) in C^eta
  double delta = 0.0;     // ||X - Y||_{C^eta} / c
  bool pass = true;
};

// Continuous dependence of flows on the field. Both fields are divided by the
// larger of their C^eta norms and time is stretched by the same factor.
inline PerturbationResult flow_distance_under_perturbation(const AnalyticVF& X, const AnalyticVF& Y,
                                                           const modulus::Modulus& eta, double t,
                                                           const std::vector<Point>& seeds,
                                                           const FlowOptions& opts = {}, int pair_count = 10000) {
  PerturbationResult out;
  const auto nx = estimate_ceta(X, eta, pair_count), ny = estimate_ceta(Y, eta, pair_count);
  out.scale = std::max(nx.total(), ny.total());
  const auto nd = estimate_ceta(fields::difference(X, Y), eta, pair_count);
  const auto ex = integrate_flow(X, t, seeds, opts), ey = integrate_flow(Y, t, seeds, opts);
  for (std::size_t i = 0; i < seeds.size(); ++i)
    out.measured = std::max(out.measured, distance(ex.endpoints[i], ey.endpoints[i], X.dim));
  if (out.scale == 0.0) {
    out.bound = 0.0;
    out.pass = out.measured <= 1e-12;
    return out;
  }
  out.delta = nd.total() / out.scale;
  out.bound = out.delta == 0.0 ? 0.0 : modulus::flow_modulus(modulus::identity_plus(eta), out.scale * std::abs(t), out.delta);
  out.pass = out.measured <= 1.05 * out.bound + 1e-12;
  return out;
}

struct PushforwardResult {
  double measured = 0.0;  // sup |(F_V^t)_* W| over the sample points
  double bound = 0.0;     // e^{|t| c1(V)} c0(W)
  bool pass = true;
};

// ((grad F_V^t) W) o F_V^{-t} at each query point q, with the Jacobian from
// central differences of the flow.
inline Point pushforward_at(const AnalyticVF& V, const AnalyticVF& W, double t, const Point& q, double step = 0.0,
                            double fd = 1e-5) {
  const int d = V.dim;
  const Point p = flow_point(V, -t, q, step);
  const Point w = W(p);
  Point out{0, 0, 0};
  for (int j = 0; j < d; ++j) {
    if (w[j] == 0.0) continue;
    Point a = p, b = p;
    a[j] += fd, b[j] -= fd;
    const Point fa = flow_point(V, t, a, step), fb = flow_point(V, t, b, step);
    for (int i = 0; i < d; ++i) out[i] += (fa[i] - fb[i]) / (2.0 * fd) * w[j];
  }
  return out;
}

inline PushforwardResult pushforward_c0_bound(const AnalyticVF& V, const AnalyticVF& W, double t,
                                              const std::vector<Point>& queries, double step = 0.0) {
  if (!V.c1_bound) throw std::invalid_argument(V.label + ": pushforward bound needs a C^1 bound");
  if (!W.c0_bound) throw std::invalid_argument(W.label + ": pushforward bound needs a C^0 bound");
  PushforwardResult out;
  out.bound = std::exp(std::abs(t) * *V.c1_bound) * *W.c0_bound;
  for (const auto& q : queries) {
    const Point v = t == 0.0 ? W(q) : pushforward_at(V, W, t, q, step);
    out.measured = std::max(out.measured, norm(v, V.dim));
  }
  out.pass = out.measured <= 1.05 * out.bound;
  return out;
}

// Random pairs in the box of X whose flows over time t stay inside the box.
// Candidates are drawn in rounds with sample_pairs; `rejected` counts the
// discarded ones.
inline std::vector<std::pair<Point, Point>> admissible_pairs(const AnalyticVF& X, double t, int count,
                                                             std::uint64_t seed, double step = 0.0,
                                                             int* rejected = nullptr) {
  std::vector<std::pair<Point, Point>> out;
  int dropped = 0;
  for (int round = 0; round < 50 && static_cast<int>(out.size()) < count; ++round) {
    for (const auto& pr : sample_pairs(X.box, count, seed + 7919ULL * round)) {
      if (static_cast<int>(out.size()) == count) break;
      try {
        flow_point(X, t, pr.first, step);
        flow_point(X, t, pr.second, step);
        out.push_back(pr);
      } catch (const FlowDomainError&) {
        ++dropped;
      }
    }
  }
  if (static_cast<int>(out.size()) < count)
    throw std::runtime_error(X.label + ": too few pairs stay in the box over the requested time");
  if (rejected) *rejected = dropped;
  return out;
}

}  // namespace rfrob::flow
