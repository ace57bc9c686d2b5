#include <cmath>
#include <filesystem>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "rfrob/profiles.hpp"
#include "rfrob/spectral.hpp"

using namespace rfrob;
using namespace rfrob::spectral;
using Catch::Matchers::WithinAbs;

namespace {

ScalarField cosine(const GridSpec& g, int k) {
  return ScalarField::sample(g, [k](const Point& p) { return std::cos(2.0 * M_PI * k * p[0]); });
}

}  // namespace

TEST_CASE("grid spec rejects bad shapes") {
  CHECK_THROWS_AS(GridSpec(4, 64), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec(1, 48), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec(2, 64, 0.0), std::invalid_argument);
  CHECK_NOTHROW(GridSpec(3, 16, 2.0));
}

TEST_CASE("blocks form a partition of unity") {
  const LPChar ch;
  for (double rho = 0.0; rho <= 256.0; rho += 0.173) {
    double sum = 0.0;
    for (int j = 0; j <= 12; ++j) sum += ch.block_multiplier(j, rho);
    CHECK_THAT(sum, WithinAbs(1.0, 1e-14));
  }
}

TEST_CASE("partial multiplier is the running block sum") {
  const LPChar ch;
  for (int nu = 0; nu <= 6; ++nu)
    for (double rho = 0.0; rho <= 200.0; rho += 0.37) {
      double sum = 0.0;
      for (int j = 0; j <= nu; ++j) sum += ch.block_multiplier(j, rho);
      CHECK_THAT(ch.partial_multiplier(nu, rho), WithinAbs(sum, 1e-14));
    }
  CHECK(ch.partial_multiplier(-1, 3.0) == 0.0);
}

TEST_CASE("profile support and normalisation") {
  const LPChar ch;
  CHECK(ch.profile(0.5) == 0.0);
  CHECK(ch.profile(2.0) == 0.0);
  CHECK(ch.profile(0.0) == 0.0);
  CHECK_THAT(ch.profile(1.0), WithinAbs(1.0, 1e-15));
  CHECK(ch.profile(1.4) > 0.0);
}

TEST_CASE("top block index follows the grid size") {
  CHECK(LPChar::j_max(GridSpec(1, 64)) == 4);
  CHECK(LPChar::j_max(GridSpec(1, 4096)) == 10);
  CHECK(LPChar::j_max(GridSpec(2, 8)) == 1);
}

TEST_CASE("a dyadic cosine lives in a single block") {
  const GridSpec g(1, 256);
  const LPChar ch;
  for (int j = 1; j <= LPChar::j_max(g); ++j) {
    const auto f = cosine(g, 1 << j);
    const Spectrum s(f);
    for (int i = 0; i <= LPChar::j_max(g); ++i) {
      const double expected = i == j ? 1.0 : 0.0;
      CHECK_THAT(s.block(i, ch).sup_norm(), WithinAbs(expected, 1e-12));
    }
  }
}

TEST_CASE("hz norm of a dyadic cosine") {
  const GridSpec g(1, 512);
  const LPChar ch;
  for (int j : {2, 4, 6}) {
    for (double alpha : {0.25, 0.5, 0.75}) {
      const auto n0 = hz_norm(cosine(g, 1 << j), 0, alpha, ch);
      CHECK_THAT(n0.value, WithinAbs(std::exp2(j * alpha), 1e-10));
      const auto nm = hz_norm(cosine(g, 1 << j), -1, alpha, ch);
      CHECK_THAT(nm.value, WithinAbs(std::exp2(j * (alpha - 1.0)), 1e-10));
    }
  }
  CHECK_THROWS_AS(hz_norm(cosine(g, 4), 2, 0.5, ch), std::invalid_argument);
  CHECK_THROWS_AS(hz_norm(cosine(g, 4), 0, 1.0, ch), std::invalid_argument);
}

TEST_CASE("spectral derivative of a sine") {
  const GridSpec g(2, 32);
  const auto f = ScalarField::sample(g, [](const Point& p) { return std::sin(2.0 * M_PI * 3.0 * p[1]); });
  const auto expected = ScalarField::sample(g, [](const Point& p) { return 6.0 * M_PI * std::cos(6.0 * M_PI * p[1]); });
  const Spectrum s(f);
  CHECK(sup_distance(s.derivative(1), expected) < 1e-11);
  CHECK(s.derivative(0).sup_norm() < 1e-12);
}

TEST_CASE("blocks reconstruct a band-limited field") {
  const GridSpec g(1, 1024);
  const LPChar ch;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto f = random_band_limited(g, 200, seed);
    CHECK(Spectrum(f).bandwidth() <= 200);
    CHECK(reconstruction_residual(f, ch) < 1e-12 * std::max(1.0, f.sup_norm()));
  }
  CHECK_THROWS_AS(random_band_limited(g, 512, 1), std::out_of_range);
}

TEST_CASE("random band-limited fields are reproducible") {
  const GridSpec g(2, 32);
  CHECK(sup_distance(random_band_limited(g, 8, 42), random_band_limited(g, 8, 42)) == 0.0);
  CHECK(sup_distance(random_band_limited(g, 8, 42), random_band_limited(g, 8, 43)) > 0.0);
}

TEST_CASE("block index outside the grid range") {
  const GridSpec g(1, 64);
  const auto f = cosine(g, 2);
  const LPChar ch;
  CHECK_THROWS_AS(lp_block(f, -1, ch), std::out_of_range);
  CHECK_THROWS_AS(lp_block(f, 5, ch), std::out_of_range);
  CHECK_THROWS_AS(lp_partial_sum(f, 5, ch), std::out_of_range);
  CHECK_NOTHROW(lp_block(f, 4, ch));
}

TEST_CASE("holder quotient of a Lipschitz ramp") {
  const GridSpec g(1, 256);
  const auto f = ScalarField::sample(g, [](const Point& p) { return std::abs(p[0]); });
  // osc over shift h is h, so the quotient is sup h^{1-alpha} at h = 1/2.
  CHECK_THAT(holder_quotient(f, 0.5), WithinAbs(0.5 + std::sqrt(0.5), 1e-12));
}

TEST_CASE("cutoff field") {
  const GridSpec g(2, 64);
  const auto c = cutoff_field(g, {0, 0, 0}, 0.1, 0.3);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double r = norm(g.node(i), 2);
    if (r <= 0.1) CHECK(c[i] == 1.0);
    if (r >= 0.3) CHECK(c[i] == 0.0);
    CHECK(c[i] >= 0.0);
    CHECK(c[i] <= 1.0);
  }
  CHECK_THROWS_AS(cutoff_field(g, {0, 0, 0}, 0.3, 0.1), std::out_of_range);
  CHECK_THROWS_AS(cutoff_field(g, {0, 0, 0}, 0.1, 0.6), std::out_of_range);
  CHECK_THAT(smooth_step(0.2, 0.1, 0.3), WithinAbs(0.5, 1e-15));
}

TEST_CASE("field io round trips") {
  const GridSpec g(2, 16, 2.0);
  const auto f = random_band_limited(g, 4, 9);
  const auto path = (std::filesystem::temp_directory_path() / "rfrob_spectral_io.bin").string();
  io::write_binary(f, path);
  const auto b = io::read_binary(path);
  std::filesystem::remove(path);
  CHECK(b.grid() == g);
  CHECK(sup_distance(b, f) == 0.0);

  std::stringstream ss;
  io::write_csv(f, ss);
  const auto c = io::read_csv(ss);
  CHECK(c.grid() == g);
  CHECK(sup_distance(c, f) == 0.0);

  std::stringstream bad("x,y\n1,2\n");
  CHECK_THROWS_AS(io::read_csv(bad), std::runtime_error);
  CHECK_THROWS_AS(io::read_binary("/nonexistent/field.bin"), std::runtime_error);
}

TEST_CASE("field arithmetic checks grids") {
  ScalarField a(GridSpec(1, 16), 1.0), b(GridSpec(1, 32), 1.0);
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  CHECK_THROWS_AS(ScalarField(GridSpec(1, 4), std::vector<double>{1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(ScalarField(GridSpec(1, 4), std::vector<double>{1, 2, NAN, 4}), std::invalid_argument);
}

TEST_CASE("two-term partition between neighbouring scales") {
  const LPChar ch;
  for (double rho = 1.01; rho < 2.0; rho += 0.07) CHECK_THAT(ch.profile(rho) + ch.profile(rho / 2), WithinAbs(1.0, 1e-15));
  CHECK(ch.profile(0.49) == 0.0);
  CHECK(ch.profile(0.5) >= 0.0);
  CHECK(ch.profile(0.5) <= 1.0);
}

TEST_CASE("constants live in block zero") {
  const GridSpec g(2, 32);
  const ScalarField c(g, 2.5);
  const LPChar ch;
  CHECK(sup_distance(lp_block(c, 0, ch), c) < 1e-14);
  for (int j = 1; j <= LPChar::j_max(g); ++j) CHECK(lp_block(c, j, ch).sup_norm() < 1e-14);
  for (int nu = 0; nu <= LPChar::j_max(g); ++nu) CHECK(sup_distance(lp_partial_sum(c, nu, ch), c) < 1e-14);
  CHECK_THAT(hz_norm(ScalarField(g, 1.0), 0, 0.5, ch).value, WithinAbs(1.0, 1e-14));
}

TEST_CASE("sine at wavenumber four") {
  const GridSpec g(1, 256);
  const LPChar ch;
  const auto f = ScalarField::sample(g, [](const Point& p) { return std::sin(2.0 * M_PI * 4.0 * p[0]); });
  CHECK(sup_distance(lp_block(f, 2, ch), f) < 1e-13);
  for (int j : {0, 1, 3, 4}) CHECK(lp_block(f, j, ch).sup_norm() < 1e-13);
  CHECK(sup_distance(lp_partial_sum(f, 5, ch), f) < 1e-13);
  CHECK(lp_partial_sum(f, 0, ch).sup_norm() < 1e-13);
  CHECK_THAT(hz_norm(f, 0, 0.5, ch).value, WithinAbs(2.0, 1e-12));
  // P_7 S_3 = 0 for any input.
  const auto r = random_band_limited(GridSpec(1, 1024), 100, 5);
  CHECK(lp_block(lp_partial_sum(r, 3, ch), 7, ch).sup_norm() < 1e-13);
}

TEST_CASE("hz norm of y log|y| is comparable to the direct quotient") {
  const GridSpec g(1, 4096);
  const LPChar ch;
  const auto f = ScalarField::sample(g, [](const Point& p) {
    return p[0] * std::log(std::abs(p[0])) * rfrob::profiles::step(p[0], 0.1, 0.2);
  });
  const auto n = hz_norm(f, 0, 0.9, ch);
  const double direct = holder_quotient(f, 0.9);
  CHECK(std::isfinite(n.value));
  // The direct quotient peaks near |x - y| = e^-10, below what 4096 cells resolve.
  CHECK(n.value < 20.0 * direct);
  CHECK(n.value > direct / 20.0);
  // 2^{0.9 j} sup|P_j f| ~ j 2^{-0.1 j}: the tail decreases.
  const auto& b = n.per_block;
  CHECK(b.back() < b[b.size() - 4]);
}

TEST_CASE("cutoff of the constant one is the bump") {
  const GridSpec g(2, 32);
  const auto bump = cutoff_field(g, {0.1, 0, 0}, 0.1, 0.3);
  const auto cut = apply_cutoff(ScalarField(g, 1.0), {0.1, 0, 0}, 0.1, 0.3);
  CHECK(sup_distance(bump, cut) == 0.0);
  const auto r = random_band_limited(g, 4, 2);
  const auto rc = apply_cutoff(r, {0.1, 0, 0}, 0.1, 0.3);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = torus_distance(g.node(i), {0.1, 0, 0}, g);
    if (d <= 0.1) CHECK(rc[i] == r[i]);
    if (d >= 0.3) CHECK(rc[i] == 0.0);
  }
}
