#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hypbrw/brw.hpp"
#include "hypbrw/errors.hpp"
#include "hypbrw/rng.hpp"
#include "hypbrw/spectral.hpp"

using namespace hypbrw;

namespace {

const GroupModel f2 = GroupModel::free_group(2);

BRWConfig small_config(double lambda, int generations, std::uint64_t seed = 42) {
  return BRWConfig{.mu = StepDistribution::simple(f2),
                   .nu = OffspringDistribution::two_point(2, lambda),
                   .max_generation = generations,
                   .seed = seed,
                   .record_depth = 3};
}

}  // namespace

TEST_CASE("offspring laws") {
  const auto two = OffspringDistribution::two_point(3, 1.5);
  CHECK(two.mean() == doctest::Approx(1.5));
  CHECK(two.pmf()[0] == 0.0);
  CHECK(two.pmf()[3] == doctest::Approx(0.25));
  CHECK(two.second_moment() == doctest::Approx(0.75 + 9 * 0.25));
  CHECK(two.sample(0.0) == 1);
  CHECK(two.sample(0.74) == 1);
  CHECK(two.sample(0.76) == 3);
  CHECK(OffspringDistribution::parse("one", 1.0).k_max() == 1);
  const auto p = OffspringDistribution::parse("pmf:0.5,0.3,0.2", 1.7);
  CHECK(p.second_moment() == doctest::Approx(0.5 + 1.2 + 1.8));
  CHECK(OffspringDistribution::parse(p.describe(), 1.7).pmf() == p.pmf());
  CHECK_THROWS_AS(OffspringDistribution::parse("pmf:0.5,0.3,0.2", 1.5), InvalidArgument);
  CHECK_THROWS_AS(OffspringDistribution::parse("two_point:x", 1.5), InvalidArgument);
  CHECK_THROWS_AS(OffspringDistribution::parse("poisson", 1.5), InvalidArgument);
  CHECK_THROWS_AS(OffspringDistribution::from_pmf({0.1, 0.9}), InvalidArgument);
  CHECK_THROWS_AS(OffspringDistribution::two_point(2, 0.9), InvalidArgument);
}

TEST_CASE("counter streams are pure functions of the key") {
  CounterRng a{1, 2, 3}, b{1, 2, 3}, c{1, 2, 4};
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    same += x == c.next();
  }
  CHECK(same == 0);
  // Bucket counts of the uniforms: chi-square with 15 dof stays far below 60.
  std::vector<int> bins(16, 0);
  for (std::uint64_t k = 0; k < 16000; ++k) {
    const double u = CounterRng{42, k}.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    ++bins[static_cast<std::size_t>(u * 16)];
  }
  double chi2 = 0.0;
  for (int n : bins) chi2 += (n - 1000.0) * (n - 1000.0) / 1000.0;
  CHECK(chi2 < 60.0);
}

TEST_CASE("runs are reproducible and thread independent") {
  const auto cfg = small_config(1.1, 40);
  const auto a = run(cfg, 5), b = run(cfg, 5), c = run(cfg, 6);
  CHECK(a.M == b.M);
  CHECK(a.Z == b.Z);
  CHECK(a.M != c.M);
  const auto r1 = run_replicas(cfg, {.replicas = 7, .threads = 1});
  const auto r3 = run_replicas(cfg, {.replicas = 7, .threads = 3});
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(r1[i].replica == i);
    CHECK(r1[i].M == r3[i].M);
    CHECK(r1[i].Z == r3[i].Z);
    CHECK(r1[i].population == r3[i].population);
  }
}

TEST_CASE("trace bookkeeping") {
  const auto cfg = small_config(1.2, 30);
  const auto t = run(cfg, 0, 4);
  CHECK(t.generations == 30);
  CHECK_FALSE(t.truncated);
  CHECK(t.M[0] == 1);
  for (std::size_t n = 0; n < t.M.size(); ++n) CHECK(t.M[n] <= f2.sphere_size(static_cast<int>(n)));
  CHECK(t.population[0] == 1);
  for (std::size_t m = 1; m < t.population.size(); ++m) {
    CHECK(t.population[m] >= t.population[m - 1]);
    CHECK(t.population[m] <= 2 * t.population[m - 1]);
  }
  CHECK(t.particle_steps == std::accumulate(t.population.begin() + 1, t.population.end(), std::uint64_t{0}));
  CHECK(t.final_particles.size() == t.population.back());
  std::uint64_t visited = 0;
  for (int n = 0; n <= 4 && n < static_cast<int>(t.M.size()); ++n) visited += t.M[static_cast<std::size_t>(n)];
  CHECK(t.visited_words.size() == visited);
  // Z_e counts the start and every return.
  CHECK(t.Z[0] >= 1);
  CHECK(t.last_watch_visit >= 0);
}

TEST_CASE("population budget truncates") {
  auto cfg = small_config(2.0, 40);
  cfg.population_budget = 5000;
  const auto t = run(cfg, 0);
  CHECK(t.truncated);
  CHECK(t.generations < 40);
}

TEST_CASE("config validation") {
  const auto rho = spectral_radius(StepDistribution::simple(f2));
  CHECK_NOTHROW(validate_config(small_config(1.1, 10), rho));
  CHECK_THROWS_AS(validate_config(small_config(1.2, 10), rho), RegimeError);
  auto bad = small_config(1.1, 10);
  bad.max_generation = 0;
  CHECK_THROWS_AS(validate_config(bad, rho), InvalidArgument);
}

TEST_CASE("visits of a single walker average to the green function") {
  // nu = delta_1 is one random walk; E[Z_e] = G_1(e, e) = 3/2 on F_2.
  BRWConfig cfg{.mu = StepDistribution::simple(f2), .nu = OffspringDistribution::deterministic_one(),
                .max_generation = 80, .seed = 42, .record_depth = 1};
  const auto m = empirical_first_moment(Word{}, 20000, cfg);
  CHECK(std::abs(m.mean - 1.5) < 4 * m.se);
  // E[Z_e^2] = G(e,e)(2 G(e,e) - 1) for a single walker.
  const auto s = empirical_second_moment(Word{}, Word{}, 20000, cfg);
  CHECK(std::abs(s.mean - 1.5 * 2.0) < 4 * s.se);
}

TEST_CASE("many-to-one on a small run") {
  auto cfg = small_config(1.05, 60);
  cfg.record_depth = 2;
  cfg.prune_far = true;
  const auto rep = empirical_moments(cfg, 20000, -1, 2);
  const auto table = GreenTable::radial(cfg.mu, 1.05, 4);
  CHECK(rep.words.size() == f2.ball_size(2));
  CHECK(rep.pairs.empty());
  for (std::size_t i = 0; i < rep.words.size(); ++i) {
    const double tail = generation_tail(cfg.mu, 1.05, rep.words[i], 60);
    CHECK(std::abs(rep.first[i].mean - (table.value(rep.words[i]) - tail)) < 4 * rep.first[i].se);
  }
  // Aggregation is in fixed blocks: the thread count does not change a digit.
  const auto again = empirical_moments(cfg, 20000, -1, 1);
  for (std::size_t i = 0; i < rep.words.size(); ++i) CHECK(again.first[i].mean == rep.first[i].mean);
}

TEST_CASE("generation tail against green minus the partial sum") {
  const auto mu = StepDistribution::simple(f2);
  const RadialHeatKernel k(mu, 30);
  const RadialGreen g(mu, 1.1, 3);
  for (int x = 0; x <= 3; ++x) {
    double partial = 0.0;
    for (int n = 0; n <= 30; ++n) partial += std::pow(1.1, n) * k.q(n, x);
    const Word w(std::vector<Letter>(static_cast<std::size_t>(x), 0));
    CHECK(generation_tail(mu, 1.1, w, 30) == doctest::Approx(g.value(x) - partial).epsilon(1e-7));
  }
}

TEST_CASE("growth fits and speeds") {
  const auto cfg = small_config(1.1, 60);
  const auto runs = run_replicas(cfg, {.replicas = 5});
  CHECK_THROWS_AS(growth_rate(runs, 5, 7), InvalidArgument);
  const auto g = growth_rate(runs, 4, 12);
  CHECK(g.runs_used == 5);
  CHECK(g.H_pooled > 1.0);
  CHECK(g.H_pooled < 1.5);
  CHECK(settled_radius(runs[0], 0.2) == 12);
  const auto sp = speed_and_jump_report(runs[0], 10, 60);
  CHECK(sp.min_speed > 0.0);
  CHECK(sp.max_speed <= 1.0);
  CHECK(sp.min_speed <= sp.max_speed);
  CHECK(speed_lower_bound(cfg.mu, 1.1, spectral_radius(cfg.mu)) > 0.0);
  CHECK_THROWS_AS(speed_and_jump_report(run(small_config(1.1, 20), 0), 1, 20), InvalidArgument);
}
