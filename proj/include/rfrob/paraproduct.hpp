// Paraproduct splitting of P_l(fg), products with negative-order factors and
// the decay of smoothed products whose limit vanishes.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfrob/grid.hpp"
#include "rfrob/profiles.hpp"
#include "rfrob/spectral.hpp"
#include "rfrob/stats.hpp"

namespace rfrob::paraproduct {

using spectral::LPChar;
using spectral::Spectrum;

struct ParaTriple {
  ScalarField low_high;   // sum_{|j-l|<=2} P_l[(P_j f)(S_{j-7} g)]
  ScalarField high_low;   // sum_{|k-l|<=2} P_l[(S_{k-7} f)(P_k g)]
  ScalarField diagonal;   // sum_{|j-k|<=6, j,k>=l-8} P_l[(P_j f)(P_k g)]
  int block_index = 0;

  ScalarField sum() const { return low_high + high_low + diagonal; }
};

// Throws unless the pointwise product of the two fields is alias-free, i.e.
// both are band-limited below N/4 along every axis.
inline void require_resolved_product(const Spectrum& a, const Spectrum& b) {
  const int limit = a.grid().points_per_axis / 4;
  const int ba = a.bandwidth(), bb = b.bandwidth();
  if (ba >= limit || bb >= limit)
    throw std::invalid_argument("product not resolved on this grid (bandwidths " + std::to_string(ba) + ", " +
                                std::to_string(bb) + " vs limit " + std::to_string(limit) +
                                "); use a finer grid");
}

// Index of the highest block that can be nonzero on the grid.
inline int top_block(const GridSpec& g) {
  double rho = 0.0;
  for (int a = 0; a < g.dim; ++a) rho += 0.25 * g.points_per_axis * g.points_per_axis;
  rho = std::sqrt(rho) / g.box_side;
  return std::max(0, static_cast<int>(std::ceil(std::log2(std::max(rho, 1.0)))) + 1);
}

// Blocks P_j and partial sums S_j of one field for j = 0..top.
struct BlockTable {
  std::vector<ScalarField> block, partial;
  ScalarField zero;

  BlockTable(const Spectrum& s, const LPChar& ch, int top) : zero(s.grid()) {
    for (int j = 0; j <= top; ++j) {
      block.push_back(s.block(j, ch));
      partial.push_back(s.partial_sum(j, ch));
    }
  }
  const ScalarField& P(int j) const { return (j < 0 || j >= static_cast<int>(block.size())) ? zero : block[j]; }
  const ScalarField& S(int j) const {
    if (j < 0) return zero;
    return partial[std::min<std::size_t>(j, partial.size() - 1)];
  }
};

inline ParaTriple para_decompose_tables(const BlockTable& F, const BlockTable& G, int l, const LPChar& ch) {
  const GridSpec& grid = F.zero.grid();
  const int top = static_cast<int>(F.block.size()) - 1;
  ScalarField lh(grid), hl(grid), dg(grid);
  for (int j = l - 2; j <= l + 2; ++j) {
    if (j < 0 || j > top) continue;
    lh += F.P(j) * G.S(j - 7);
    hl += F.S(j - 7) * G.P(j);
  }
  for (int j = std::max(0, l - 8); j <= top; ++j)
    for (int k = std::max(std::max(0, l - 8), j - 6); k <= std::min(top, j + 6); ++k) dg += F.P(j) * G.P(k);
  return {Spectrum(lh).block(l, ch), Spectrum(hl).block(l, ch), Spectrum(dg).block(l, ch), l};
}

inline ParaTriple para_decompose(const ScalarField& f, const ScalarField& g, int l, const LPChar& ch) {
  f.check_same(g);
  spectral::check_block_index(l, f.grid(), "para_decompose");
  Spectrum sf(f), sg(g);
  require_resolved_product(sf, sg);
  const int top = top_block(f.grid());
  return para_decompose_tables(BlockTable(sf, ch, top), BlockTable(sg, ch, top), l, ch);
}

// max_l ||sum of triple - P_l(fg)||_inf over l = 0..j_max.
inline double para_identity_residual(const ScalarField& f, const ScalarField& g, const LPChar& ch) {
  f.check_same(g);
  Spectrum sf(f), sg(g);
  require_resolved_product(sf, sg);
  const int top = top_block(f.grid());
  BlockTable F(sf, ch, top), G(sg, ch, top);
  Spectrum prod(f * g);
  double worst = 0.0;
  for (int l = 0; l <= LPChar::j_max(f.grid()); ++l)
    worst = std::max(worst, sup_distance(para_decompose_tables(F, G, l, ch).sum(), prod.block(l, ch)));
  return worst;
}

struct NegOrderProduct {
  ScalarField product;          // (S_J f)(S_J g) at the top resolved J
  int top_index = 0;            // J
  spectral::HZNorm norm;        // hz_norm(product, -1, beta)
  double delta = 0.0;           // exponent used for the Cauchy differences
  std::vector<int> nus;         // nu of each Cauchy difference (nu vs nu+1)
  std::vector<double> cauchy;   // ||p_nu - p_{nu+1}||_{C^{-1,delta}}
  bool cauchy_decreasing = false;
  double ratio = 0.0;           // ||fg||_{-1,beta} / (||f||_{0,alpha} ||g||_{-1,beta})
};

// Product of an f in the C^{0,alpha} role with a g in the C^{-1,beta} role.
inline NegOrderProduct product_neg_order(const ScalarField& f, const ScalarField& g, double alpha, double beta,
                                         const LPChar& ch, double delta = -1.0) {
  if (!(alpha + beta > 1.0)) throw std::invalid_argument("product_neg_order: requires alpha + beta > 1");
  if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("product_neg_order: alpha, beta must lie in (0,1)");
  if (delta < 0.0) delta = 0.5 * beta;
  if (!(delta > 0.0 && delta < beta)) throw std::invalid_argument("product_neg_order: need 0 < delta < beta");
  f.check_same(g);
  const GridSpec& grid = f.grid();
  // S_J has |k| < 2^{J+1} box_side; keep that below N/4 per axis.
  int J = static_cast<int>(std::floor(std::log2(grid.points_per_axis / 4.0 / grid.box_side))) - 1;
  J = std::min(J, LPChar::j_max(grid));
  if (J < 1) throw std::invalid_argument("product_neg_order: grid too coarse");
  Spectrum sf(f), sg(g);
  NegOrderProduct out;
  out.top_index = J;
  out.delta = delta;
  std::vector<ScalarField> partial;
  for (int nu = 0; nu <= J; ++nu) partial.push_back(sf.partial_sum(nu, ch) * sg.partial_sum(nu, ch));
  out.product = partial.back();
  out.norm = spectral::hz_norm(out.product, -1, beta, ch);
  for (int nu = 0; nu < J; ++nu) {
    out.nus.push_back(nu);
    out.cauchy.push_back(spectral::hz_norm(partial[nu + 1] - partial[nu], -1, delta, ch).value);
  }
  out.cauchy_decreasing = true;
  const std::size_t start = out.cauchy.size() > 4 ? out.cauchy.size() - 4 : 0;
  for (std::size_t i = start + 1; i < out.cauchy.size(); ++i)
    if (out.cauchy[i] > out.cauchy[i - 1]) out.cauchy_decreasing = false;
  const double nf = spectral::hz_norm_from(sf, 0, alpha, ch).value;
  const double ng = spectral::hz_norm_from(sg, -1, beta, ch).value;
  out.ratio = (nf > 0.0 && ng > 0.0) ? out.norm.value / (nf * ng) : 0.0;
  return out;
}

struct DecayReport {
  double alpha = 0.75;
  std::vector<int> nus;
  std::vector<double> sup_norms;
  std::vector<bool> used;            // false for entries at the noise floor
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double threshold = 0.0;            // -(2 alpha - 1) + 0.15
  bool vanished = false;             // every entry at the noise floor
  bool pass = false;
};

inline constexpr double kNoiseFloor = 1e-13;

// sup_x |sum_i (S_nu f_i)(S_nu g_i)| per nu, for data whose dot product vanishes.
inline DecayReport vanished_product_decay(const std::vector<ScalarField>& fs, const std::vector<ScalarField>& gs,
                                          double alpha, const std::vector<int>& nus, const LPChar& ch) {
  if (fs.empty() || fs.size() != gs.size())
    throw std::invalid_argument("vanished_product_decay: tuples must have equal nonzero length");
  if (!(alpha > 0.5 && alpha < 1.0)) throw std::invalid_argument("vanished_product_decay: alpha must lie in (1/2,1)");
  const GridSpec& grid = fs[0].grid();
  ScalarField dot(grid);
  double scale = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    fs[i].check_same(gs[i]);
    fs[i].check_same(fs[0]);
    dot += fs[i] * gs[i];
    scale += fs[i].sup_norm() * gs[i].sup_norm();
  }
  if (dot.sup_norm() > 1e-10 * std::max(scale, 1e-300))
    throw std::invalid_argument("vanished_product_decay: sum f_i g_i does not vanish (sup " +
                                std::to_string(dot.sup_norm()) + ")");
  for (int nu : nus) spectral::check_block_index(nu, grid, "vanished_product_decay");

  std::vector<Spectrum> sf, sg;
  for (std::size_t i = 0; i < fs.size(); ++i) sf.emplace_back(fs[i]), sg.emplace_back(gs[i]);
  DecayReport rep;
  rep.alpha = alpha;
  rep.threshold = -(2.0 * alpha - 1.0) + 0.15;
  std::vector<double> x, y;
  for (int nu : nus) {
    ScalarField acc(grid);
    for (std::size_t i = 0; i < fs.size(); ++i) acc += sf[i].partial_sum(nu, ch) * sg[i].partial_sum(nu, ch);
    const double s = acc.sup_norm();
    rep.nus.push_back(nu);
    rep.sup_norms.push_back(s);
    rep.used.push_back(s >= kNoiseFloor);
    if (s >= kNoiseFloor) x.push_back(nu), y.push_back(std::log2(s));
  }
  if (x.size() >= 2) {
    rep.fitted_slope = stats::fit_line(x, y).slope;
    rep.pass = rep.fitted_slope <= rep.threshold;
  } else if (x.empty()) {
    rep.vanished = true;
    rep.pass = true;
  }
  return rep;
}

struct SupportReport {
  int nu = 0;
  double low_max = 0.0;   // max_{l <= nu-10} sup|P_l q|
  double high_max = 0.0;  // max_{l >= nu+3} sup|P_l q|
  double product_sup = 0.0;
};

// Block content of q = sum_i (S_nu f_i)(S_nu g_i) far below and above nu.
inline SupportReport product_support(const std::vector<ScalarField>& fs, const std::vector<ScalarField>& gs, int nu,
                                     const LPChar& ch) {
  const GridSpec& grid = fs.at(0).grid();
  ScalarField q(grid);
  for (std::size_t i = 0; i < fs.size(); ++i)
    q += Spectrum(fs[i]).partial_sum(nu, ch) * Spectrum(gs.at(i)).partial_sum(nu, ch);
  Spectrum sq(q);
  SupportReport rep;
  rep.nu = nu;
  rep.product_sup = q.sup_norm();
  for (int l = 0; l <= nu - 10; ++l) rep.low_max = std::max(rep.low_max, sq.block(l, ch).sup_norm());
  for (int l = nu + 3; l <= top_block(grid); ++l) rep.high_max = std::max(rep.high_max, sq.block(l, ch).sup_norm());
  return rep;
}

struct VanishedPair {
  std::vector<ScalarField> f, g;  // sum_i f_i g_i = 0 pointwise
};

// From the shears a(y) d/dx and b(y) d/dx with one-sided profiles a (y > 0)
// and b (y < 0): f = (a, -b), g = (b', a'), so f . g = a b' - b a' = 0.
inline VanishedPair shear_pair(const GridSpec& g) {
  if (g.dim != 1) throw std::invalid_argument("shear_pair: 1-D grid expected");
  const profiles::OneSided a{0.1, 0.2, true}, b{0.1, 0.2, false};
  VanishedPair p;
  p.f = {ScalarField::sample(g, [&](const Point& x) { return a(x[0]); }),
         ScalarField::sample(g, [&](const Point& x) { return -b(x[0]); })};
  p.g = {ScalarField::sample(g, [&](const Point& x) { return b.derivative(x[0]); }),
         ScalarField::sample(g, [&](const Point& x) { return a.derivative(x[0]); })};
  return p;
}

}  // namespace rfrob::paraproduct
