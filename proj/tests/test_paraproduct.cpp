#include <cmath>

#include "catch_amalgamated.hpp"
#include "rfrob/paraproduct.hpp"

using namespace rfrob;
using namespace rfrob::paraproduct;
using spectral::random_band_limited;

namespace {

ScalarField cosine(const GridSpec& g, int k) {
  return ScalarField::sample(g, [k](const Point& p) { return std::cos(2.0 * M_PI * k * p[0]); });
}

}  // namespace

TEST_CASE("paraproduct pieces sum to the block of the product") {
  const LPChar ch;
  for (int dim : {1, 2}) {
    const GridSpec g(dim, dim == 1 ? 512 : 64);
    const int band = g.points_per_axis / 5;
    for (std::uint64_t seed : {3u, 4u}) {
      const auto f = random_band_limited(g, band, seed), h = random_band_limited(g, band, seed + 100);
      const double scale = f.sup_norm() * h.sup_norm();
      CHECK(para_identity_residual(f, h, ch) < 1e-12 * scale);
    }
  }
}

TEST_CASE("high-low product lands in the low-high piece") {
  // f has a single frequency 256 (block 8) and g a single frequency 1 (block 0),
  // so at l = 8 the product is carried entirely by P_8 f S_1 g.
  const GridSpec g(1, 2048);
  const LPChar ch;
  const auto f = cosine(g, 256), h = cosine(g, 1);
  const auto t = para_decompose(f, h, 8, ch);
  CHECK(t.block_index == 8);
  CHECK(t.high_low.sup_norm() < 1e-13);
  CHECK(t.diagonal.sup_norm() < 1e-13);
  const auto expected = spectral::lp_block(f * h, 8, ch);
  CHECK(sup_distance(t.low_high, expected) < 1e-12);
  CHECK(expected.sup_norm() > 0.5);
}

TEST_CASE("unresolved products are rejected") {
  const GridSpec g(1, 256);
  const LPChar ch;
  const auto wide = random_band_limited(g, 80, 1), narrow = random_band_limited(g, 10, 2);
  CHECK_THROWS_AS(para_identity_residual(wide, narrow, ch), std::invalid_argument);
  CHECK_THROWS_AS(para_decompose(narrow, narrow, 9, ch), std::out_of_range);
  CHECK_THROWS_AS(para_identity_residual(narrow, ScalarField(GridSpec(1, 128)), ch), std::invalid_argument);
}

TEST_CASE("shear pair has vanishing dot product") {
  const GridSpec g(1, 4096);
  const auto p = shear_pair(g);
  REQUIRE(p.f.size() == 2);
  const auto dot = p.f[0] * p.g[0] + p.f[1] * p.g[1];
  CHECK(dot.sup_norm() == 0.0);
  CHECK(p.f[0].sup_norm() > 0.0);
  CHECK(p.g[1].sup_norm() > 0.0);
  CHECK_THROWS_AS(shear_pair(GridSpec(2, 16)), std::invalid_argument);
}

TEST_CASE("truncated dot products of the shear pair decay") {
  const GridSpec g(1, 4096);
  const LPChar ch;
  const auto p = shear_pair(g);
  const auto rep = vanished_product_decay(p.f, p.g, 0.75, {4, 5, 6, 7, 8}, ch);
  CHECK_FALSE(rep.vanished);
  CHECK(rep.fitted_slope < rep.threshold);
  CHECK(rep.pass);
  for (std::size_t i = 1; i < rep.sup_norms.size(); ++i) CHECK(rep.sup_norms[i] < rep.sup_norms[i - 1]);
}

TEST_CASE("decay check validates its inputs") {
  const GridSpec g(1, 256);
  const LPChar ch;
  const auto f = cosine(g, 3);
  CHECK_THROWS_AS(vanished_product_decay({f}, {f}, 0.75, {2, 3}, ch), std::invalid_argument);
  const auto p = shear_pair(g);
  CHECK_THROWS_AS(vanished_product_decay(p.f, p.g, 0.4, {2, 3}, ch), std::invalid_argument);
  CHECK_THROWS_AS(vanished_product_decay(p.f, p.g, 0.75, {2, 30}, ch), std::out_of_range);
  CHECK_THROWS_AS(vanished_product_decay({}, {}, 0.75, {2}, ch), std::invalid_argument);
}

TEST_CASE("exactly cancelling pairs report vanished") {
  const GridSpec g(1, 256);
  const LPChar ch;
  const auto a = random_band_limited(g, 20, 8), b = random_band_limited(g, 20, 9);
  // a b + b (-a) = 0 and every truncation cancels too.
  const auto rep = vanished_product_decay({a, b}, {b, -1.0 * a}, 0.75, {1, 2, 3, 4}, ch);
  CHECK(rep.vanished);
  CHECK(rep.pass);
}

TEST_CASE("negative-order product of band-limited data") {
  const GridSpec g(1, 256);
  const LPChar ch;
  const auto f = random_band_limited(g, 8, 1), h = random_band_limited(g, 8, 2);
  const auto out = product_neg_order(f, h, 0.7, 0.5, ch);
  CHECK(out.top_index == 5);
  CHECK(sup_distance(out.product, f * h) < 1e-12 * f.sup_norm() * h.sup_norm());
  // S_nu f = f once 2^nu >= 8, so the Cauchy differences vanish from nu = 3.
  for (std::size_t i = 0; i < out.nus.size(); ++i)
    if (out.nus[i] >= 3) CHECK(out.cauchy[i] < 1e-12);
  CHECK(out.ratio > 0.0);
  CHECK_THROWS_AS(product_neg_order(f, h, 0.3, 0.5, ch), std::invalid_argument);
  CHECK_THROWS_AS(product_neg_order(f, h, 0.7, 0.5, ch, 0.6), std::invalid_argument);
}

TEST_CASE("support of the truncated product") {
  const GridSpec g(1, 4096);
  const LPChar ch;
  const auto p = shear_pair(g);
  const auto rep = product_support(p.f, p.g, 8, ch);
  CHECK(rep.nu == 8);
  // Products of S_8 data have frequencies below 2 * 2^9.
  CHECK(rep.high_max < 1e-12 * std::max(1.0, rep.product_sup));
}

TEST_CASE("paraproduct with the constant one") {
  const GridSpec g(1, 1024);
  const LPChar ch;
  const ScalarField one(g, 1.0);
  const auto h = random_band_limited(g, 200, 6);
  for (int l = 3; l <= LPChar::j_max(g); ++l) {
    const auto t = para_decompose(one, h, l, ch);
    CHECK(t.low_high.sup_norm() < 1e-13);
    CHECK(sup_distance(t.sum(), spectral::lp_block(h, l, ch)) < 1e-12 * h.sup_norm());
  }
}

TEST_CASE("separated single modes give empty terms") {
  // Wavenumbers 4 (block 2) and 64 (block 6); the product lives at 60 and 68.
  const GridSpec g(1, 1024);
  const LPChar ch;
  const auto f = cosine(g, 4), h = cosine(g, 64);
  for (int l : {0, 1, 2, 3, 8}) {
    const auto t = para_decompose(f, h, l, ch);
    CHECK(t.low_high.sup_norm() < 1e-13);
    CHECK(t.high_low.sup_norm() < 1e-13);
    CHECK(t.diagonal.sup_norm() < 1e-13);
  }
}

TEST_CASE("negative-order product with a derivative") {
  const GridSpec g(1, 256);
  const LPChar ch;
  const auto f = random_band_limited(g, 6, 11);
  const auto dh = spectral::Spectrum(random_band_limited(g, 6, 12)).derivative(0);
  const auto out = product_neg_order(f, dh, 0.75, 0.75, ch);
  CHECK(sup_distance(out.product, f * dh) < 1e-8);
}

TEST_CASE("Cauchy differences of a rough product decay") {
  const GridSpec g(1, 4096);
  const LPChar ch;
  const profiles::OneSided a{0.1, 0.2, true};
  const auto f = ScalarField::sample(g, [](const Point& p) {
    return std::pow(std::abs(p[0]), 0.8) * profiles::step(p[0], 0.1, 0.2);
  });
  const auto dh = ScalarField::sample(g, [&](const Point& p) { return a.derivative(p[0]); });
  const auto out = product_neg_order(f, dh, 0.75, 0.75, ch);
  CHECK(out.cauchy_decreasing);
  CHECK(out.cauchy.back() < out.cauchy.front());
}
