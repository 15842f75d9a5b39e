#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "hypbrw/errors.hpp"
#include "hypbrw/green.hpp"

using namespace hypbrw;

namespace {

// Isotropic nearest-neighbour walk on the d-regular tree with holding p0:
// first passage F solves F = r (p0 F + s + s (d-1) F^2), s = (1 - p0) / d.
struct TreeOracle {
  double F, G_ee;
  TreeOracle(int d, double p0, double r) {
    const double s = (1.0 - p0) / d;
    const double b = 1.0 - r * p0;
    F = (b - std::sqrt(b * b - 4.0 * r * r * s * s * (d - 1))) / (2.0 * r * s * (d - 1));
    G_ee = 1.0 / (1.0 - r * p0 - r * d * s * F);
  }
  double G(int k) const { return G_ee * std::pow(F, k); }
  /// sum_y G(e,y)^2
  double eta(int d) const { return G_ee * G_ee * (1.0 + d * F * F / (1.0 - (d - 1) * F * F)); }
};

const GroupModel f2 = GroupModel::free_group(2);

}  // namespace

TEST_CASE("step laws parse and validate") {
  const auto srw = StepDistribution::parse(f2, "srw");
  CHECK(srw.is_isotropic());
  CHECK(srw.atoms().size() == 4);
  const auto lazy = StepDistribution::parse(f2, "lazy:0.5");
  CHECK(lazy.is_isotropic());
  CHECK(lazy.laziness() == 0.5);
  const auto t = StepDistribution::parse(f2, "table:a1=0.2;A1=0.2;a2=0.2;A2=0.2;a1 a2=0.1;A2 A1=0.1");
  CHECK_FALSE(t.is_isotropic());
  CHECK(t.max_step() == 2);
  CHECK_THROWS_AS(StepDistribution::parse(f2, "table:a1=0.5;A1=0.3;a2=0.1;A2=0.1"), InvalidArgument);
  CHECK_THROWS_AS(StepDistribution::parse(f2, "table:a1=0.2;A1=0.2"), InvalidArgument);
  CHECK_THROWS_AS(StepDistribution::parse(f2, "lazy:1.5"), InvalidArgument);
  CHECK_THROWS_AS(StepDistribution::parse(f2, "levy"), InvalidArgument);
}

TEST_CASE("radial heat kernel matches ball convolution") {
  for (const auto& mu : {StepDistribution::simple(f2), StepDistribution::lazy(f2, 0.3),
                         StepDistribution::simple(GroupModel::free_product_z2(3))}) {
    const RadialHeatKernel rk(mu, 10);
    const BallHeatKernel bk(mu, 10);
    const auto& g = mu.group();
    std::mt19937_64 rng(11);
    for (int n = 0; n <= 10; ++n) {
      CHECK(rk.row_sum(n) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(bk.row_sum(n) == doctest::Approx(1.0).epsilon(1e-12));
      for (int t = 0; t < 20; ++t) {
        const auto x = testgen::random_word_up_to(g, rng, n);
        CHECK(rk.q(n, static_cast<int>(x.size())) == doctest::Approx(bk.p(n, x)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("spectral radius against closed forms") {
  const auto check = [](const StepDistribution& mu, double want) {
    const auto est = spectral_radius(mu);
    CHECK(est.converged);
    CHECK(est.rho_hat == doctest::Approx(want).epsilon(1e-6));
    CHECK(est.inflated() >= est.rho_hat);
  };
  check(StepDistribution::simple(f2), std::sqrt(3.0) / 2.0);
  check(StepDistribution::simple(GroupModel::free_group(3)), 2.0 * std::sqrt(5.0) / 6.0);
  check(StepDistribution::simple(GroupModel::free_product_z2(5)), 2.0 * std::sqrt(4.0) / 5.0);
  check(StepDistribution::lazy(f2, 0.5), 0.5 + 0.5 * std::sqrt(3.0) / 2.0);
}

TEST_CASE("radial green matches the tree oracle") {
  for (double p0 : {0.0, 0.5}) {
    const auto mu = p0 == 0.0 ? StepDistribution::simple(f2) : StepDistribution::lazy(f2, p0);
    const auto rho = spectral_radius(mu);
    for (double f : {0.0, 0.3, 0.7, 0.99}) {
      const double r = 1.0 + f * (1.0 / rho.inflated() - 1.0);
      const TreeOracle o(4, p0, r);
      const RadialGreen g(mu, r, 20);
      for (int k = 0; k <= 20; ++k) {
        CHECK(g.value(k) == doctest::Approx(o.G(k)).epsilon(1e-10));
        CHECK(green_closed_form_tree(mu, r, k) == doctest::Approx(o.G(k)).epsilon(1e-12));
        CHECK(std::exp(g.log_lower(k)) <= std::exp(g.log_upper(k)) * (1 + 1e-15));
      }
    }
  }
}

TEST_CASE("time series and ball engines agree with the radial one") {
  const auto mu = StepDistribution::simple(f2);
  const auto rho = spectral_radius(mu);
  for (double r : {1.0, 1.05}) {
    const RadialGreen g(mu, r, 6);
    const auto ts = green_time_series(mu, r, 6, rho);
    // Killed walks undercount, less so on the bigger ball.
    const auto small = GreenTable::ball(mu, r, 8, rho);
    const auto ball = GreenTable::ball(mu, r, 12, rho);
    for (int k = 0; k <= 6; ++k) {
      CHECK(ts.values[static_cast<std::size_t>(k)].value == doctest::Approx(g.value(k)).epsilon(1e-9));
      Word x(std::vector<Letter>(static_cast<std::size_t>(k), 2));
      CHECK(ball.value(x) == doctest::Approx(g.value(k)).epsilon(k <= 2 ? 1e-4 : 3e-3));
      CHECK(small.value(x) < ball.value(x));
      CHECK(ball.value(x) <= g.value(k) * (1 + 1e-12));
    }
  }
}

TEST_CASE("weights outside [1, 1/rho] are rejected") {
  const auto mu = StepDistribution::simple(f2);
  const auto rho = spectral_radius(mu);
  CHECK_THROWS_AS(check_weight(0.9, rho), InvalidArgument);
  CHECK_THROWS_AS(check_weight(1.2, rho), RegimeError);
  CHECK_NOTHROW(check_weight(1.1, rho));
  CHECK_THROWS_AS(RadialGreen(mu, 1.2, 4), RegimeError);
}

TEST_CASE("eta and the derivative identity") {
  const auto mu = StepDistribution::simple(f2);
  const auto rho = spectral_radius(mu);
  for (double r : {1.0, 1.05, 1.1, 1.15}) {
    CHECK(eta(mu, r, rho).value == doctest::Approx(TreeOracle(4, 0.0, r).eta(4)).epsilon(1e-9));
  }
  for (double r : {1.0, 1.05}) {
    const auto d = green_derivative_check(mu, r, 1e-3, rho);
    CHECK(d.rel_error_richardson < 1e-6);
    CHECK(d.rel_error_h2 < d.rel_error);
  }
}

TEST_CASE("sphere sums are exactly exponential on trees") {
  const auto mu = StepDistribution::simple(f2);
  const auto rho = spectral_radius(mu);
  for (double r : {1.0, 1.1}) {
    const TreeOracle o(4, 0.0, r);
    const auto s = sphere_green_series(mu, r, 60, rho);
    for (int n = 1; n <= 60; ++n) {
      const double want = static_cast<double>(f2.sphere_size(n > 30 ? 30 : n)) * std::pow(3.0, n > 30 ? n - 30 : 0) *
                          o.G(n);
      CHECK(s.H[static_cast<std::size_t>(n)] == doctest::Approx(want).epsilon(1e-9));
    }
    CHECK(s.H_estimate == doctest::Approx(3.0 * o.F).epsilon(1e-10));
    const auto c = multiplicativity_constants(s);
    CHECK(c.sub_interior == doctest::Approx(c.super_interior).epsilon(1e-9));
    CHECK(c.sub_const >= c.sub_interior);
    CHECK(c.super_const <= c.super_interior);
  }
}

TEST_CASE("triple sums by tripod and by brute force") {
  const auto mu = StepDistribution::simple(f2);
  const auto table = GreenTable::radial(mu, 1.05, 24);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 10; ++t) {
    const auto x = testgen::random_word_up_to(f2, rng, 3), y = testgen::random_word_up_to(f2, rng, 3);
    const double a = triple_green_sum(table.radial_engine(), f2, x, y);
    const double b = triple_green_sum_ball(table, x, y, 11);
    CHECK(a == doctest::Approx(b).epsilon(1e-6));
    CHECK(a == doctest::Approx(triple_green_sum(table.radial_engine(), f2, y, x)).epsilon(1e-12));
  }
}

TEST_CASE("restricted green function") {
  const auto mu = StepDistribution::simple(f2);
  const auto rho = spectral_radius(mu);
  const Word x{0, 2};
  CHECK(restricted_green(mu, 1.05, Word{}, x, Region::whole(), rho).value ==
        doctest::Approx(green(mu, 1.05, x, rho).value).epsilon(1e-9));
  // Killing outside B(e, 5) is the ball engine at radius 5.
  const auto inside = Region::bounded([](const Word& w) { return w.size() <= 5; }, 5);
  const BallGreen ball(mu, 1.05, 5, rho);
  CHECK(restricted_green(mu, 1.05, Word{}, x, inside, rho).value == doctest::Approx(ball.at(x).value).epsilon(1e-9));
  // Avoiding the middle vertex of a geodesic forbids every path on a tree.
  const auto avoid = Region::windowed([](const Word& w) { return w != Word{0}; }, 8);
  CHECK(restricted_green(mu, 1.05, Word{}, x, avoid, rho).value == doctest::Approx(0.0));
}

TEST_CASE("green ratios along geodesics are constant on trees") {
  const auto mu = StepDistribution::simple(f2);
  const auto table = GreenTable::radial(mu, 1.1, 10);
  const auto scan = ancona_ratio_scan(table, 4);
  CHECK(scan.triples > 0);
  CHECK(scan.max_ratio == doctest::Approx(1.0 / table.value(Word{})).epsilon(1e-10));
  CHECK(scan.min_ratio == doctest::Approx(scan.max_ratio).epsilon(1e-10));
}

TEST_CASE("ball green is nearly symmetric") {
  // G(x, y) = G(y, x) for symmetric laws; the killed ball breaks it only
  // through paths that reach the boundary.
  const auto mu = StepDistribution::parse(f2, "table:a1=0.2;A1=0.2;a2=0.2;A2=0.2;a1 a2=0.1;A2 A1=0.1");
  const auto rho = spectral_radius(mu);
  const auto t = GreenTable::make(mu, 1.0, 8, rho);
  CHECK_FALSE(t.isotropic());
  std::mt19937_64 rng(13);
  for (int k = 0; k < 30; ++k) {
    const auto x = testgen::random_word_up_to(f2, rng, 3), y = testgen::random_word_up_to(f2, rng, 3);
    CHECK(t.value(x, y) == doctest::Approx(t.value(y, x)).epsilon(2e-3));
  }
}
