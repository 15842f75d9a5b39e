#include <doctest.h>

#include <cmath>

#include "hypbrw/errors.hpp"
#include "hypbrw/limit_set.hpp"
#include "hypbrw/spectral.hpp"

using namespace hypbrw;

namespace {

const GroupModel f2 = GroupModel::free_group(2);

BoundarySampleSet from_words(std::vector<Word> ws, std::vector<int> run, int k) {
  BoundarySampleSet s;
  s.prefix_length = k;
  s.a = std::exp(1.0);
  for (auto& w : ws) s.samples.push_back({std::move(w), k});
  s.run = std::move(run);
  return s;
}

}  // namespace

TEST_CASE("full boundary dimension is the volume entropy") {
  for (const auto& g : {f2, GroupModel::free_group(3), GroupModel::free_product_z2(4)}) {
    const auto cover = full_boundary_cover(g, 0.1, 12);
    for (std::size_t i = 0; i < cover.k.size(); ++i)
      CHECK(cover.N[i] == g.sphere_size(cover.prefix_length[i]));
    const auto box = box_dimension(cover, std::exp(1.0), 2, 12);
    CHECK(box.value == doctest::Approx(g.entropy()).epsilon(1e-12));
    CHECK(box_dimension(cover, 2.0, 2, 12).value == doctest::Approx(g.entropy() / std::log(2.0)).epsilon(1e-12));
    const auto uni = uniform_boundary_samples(g, 4000, 12, std::exp(1.0), 42);
    CHECK(correlation_dimension(uni, 2, 8).value == doctest::Approx(g.entropy()).epsilon(0.03));
  }
  CHECK_THROWS_AS(box_dimension(full_boundary_cover(f2, 0.1, 12), std::exp(1.0), 4, 12), InvalidArgument);
  CHECK_THROWS_AS(box_dimension(full_boundary_cover(f2, 0.1, 12), 1.0, 2, 12), InvalidArgument);
}

TEST_CASE("pair correlation by brute force") {
  const auto s = uniform_boundary_samples(f2, 300, 10, std::exp(1.0), 7);
  std::uint64_t pairs = 0;
  const auto c = pair_correlation(s, &pairs);
  REQUIRE(c.size() == 11);
  std::vector<double> want(11, 0.0);
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < s.samples.size(); ++i)
    for (std::size_t j = i + 1; j < s.samples.size(); ++j) {
      if (s.run[i] != s.run[j]) continue;
      ++n;
      const auto g = common_prefix_length(s.samples[i].prefix, s.samples[j].prefix);
      for (std::size_t l = 0; l <= g && l <= 10; ++l) want[l] += 1.0;
    }
  CHECK(pairs == n);
  for (std::size_t l = 0; l <= 10; ++l) CHECK(c[l] == doctest::Approx(want[l] / static_cast<double>(n)));
  for (std::size_t l = 1; l <= 10; ++l) CHECK(c[l] <= c[l - 1]);
}

TEST_CASE("correlation is zero with one point per run and needs pairs") {
  const auto lone = from_words({Word{0, 2, 2}, Word{1, 3, 3}}, {0, 1}, 3);
  CHECK(correlation_dimension(lone, 0, 3).value == 0.0);
  const auto few = from_words({Word{0, 2, 2}, Word{0, 3, 3}, Word{2, 2, 2}}, {0, 0, 0}, 3);
  CHECK_THROWS_AS(correlation_dimension(few, 0, 3), InvalidArgument);
}

TEST_CASE("boundary samples from traces") {
  const BRWConfig cfg{.mu = StepDistribution::simple(f2),
                      .nu = OffspringDistribution::two_point(2, 1.3),
                      .max_generation = 30,
                      .seed = 42,
                      .record_depth = 0};
  const auto runs = run_replicas(cfg, {.replicas = 4, .keep_radius = 6});
  const int k = default_prefix_length(runs);
  CHECK(k > 0);
  CHECK(k < 30);
  const auto s = sample_boundary(runs, k, std::exp(1.0));
  CHECK(s.samples.size() == s.run.size());
  for (std::size_t i = 1; i < s.samples.size(); ++i) {
    CHECK(s.samples[i].prefix.size() == static_cast<std::size_t>(k));
    if (s.run[i] == s.run[i - 1]) CHECK(s.samples[i - 1].prefix < s.samples[i].prefix);
  }
  CHECK_THROWS_AS(sample_boundary(runs[0], 31, std::exp(1.0)), InvalidArgument);

  const auto cover = shadow_cover_counts(runs, 0.1, 6);
  const auto full = full_boundary_cover(f2, 0.1, 6);
  for (std::size_t i = 0; i < cover.k.size(); ++i) {
    CHECK(cover.N[i] >= 1);
    CHECK(cover.N[i] <= full.N[i]);
    if (i > 0) CHECK(cover.N[i] >= cover.N[i - 1]);
  }
  const auto e = energy_threshold_dimension(s, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5});
  CHECK(e.value >= 0.0);
  CHECK(e.value <= 0.5);
}

TEST_CASE("dimension report at the edges of the range") {
  const auto mu = StepDistribution::simple(f2);
  const auto rho = spectral_radius(mu);
  DimensionConfig cfg{.mu = mu, .lambdas = {1.0, 1.1}, .replicas = 6, .final_population = 2e4};
  CHECK(generations_for(cfg, 1.1) == 104);
  CHECK(generations_for(cfg, 1.0) == cfg.max_generation);
  const auto rows = dimension_report(cfg, rho);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].h_target == 0.0);
  CHECK(rows[0].box.value < 0.02);
  CHECK(rows[0].corr.value == 0.0);
  CHECK(rows[1].h_target == doctest::Approx(std::log(pressure_growth(mu, 1.1, rho))));
  CHECK_FALSE(rows[1].conjectural);
  cfg.lambdas = {1.2};
  CHECK_THROWS_AS(dimension_report(cfg, rho), RegimeError);
}
