#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "hypbrw/errors.hpp"
#include "hypbrw/spectral.hpp"

using namespace hypbrw;

namespace {

const GroupModel f2 = GroupModel::free_group(2);

double dense_spectral_radius(const TransferMatrix& m) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m.dim, m.dim);
  for (int i = 0; i < m.dim; ++i)
    for (const auto& [j, v] : m.rows[static_cast<std::size_t>(i)]) a(i, j) += v;
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

TransferMatrix from_edges(int dim, const std::vector<std::tuple<int, int, double>>& edges) {
  TransferMatrix m;
  m.dim = dim;
  m.rows.resize(static_cast<std::size_t>(dim));
  for (const auto& [i, j, v] : edges) m.rows[static_cast<std::size_t>(i)].emplace_back(j, v);
  return m;
}

}  // namespace

TEST_CASE("automaton accepts exactly the spheres") {
  for (const auto& g : {f2, GroupModel::free_group(3), GroupModel::free_product_z2(3), GroupModel::free_product_z2(4)}) {
    const Automaton a(g);
    for (int n = 0; n <= 9; ++n) CHECK(a.count_paths(n) == g.sphere_size(n));
    const auto audit = audit_automaton(a, 6);
    CHECK(audit.accessible);
    CHECK(audit.geodesic);
    CHECK(audit.bijective);
    CHECK(audit.strongly_connected);
    CHECK(a.out_degree(Automaton::initial()) == g.alphabet_size());
    for (int s = 1; s < a.num_states(); ++s) CHECK(a.out_degree(s) == g.growth_base());
  }
  CHECK(Automaton(f2).count_paths(5) == 324);
}

TEST_CASE("power iteration matches a dense eigen solver") {
  const Automaton a(f2);
  const auto lazy = StepDistribution::lazy(f2, 0.3);
  const auto rho = spectral_radius(lazy);
  for (int h : {0, 1, 2}) {
    for (double r : {1.0, 1.1}) {
      const auto phi = build_potential(GreenTable::make(lazy, r, h + 1, rho), h);
      const auto m = transfer_matrix(phi, a);
      const auto p = pressure(m);
      CHECK(p.H == doctest::Approx(dense_spectral_radius(m)).epsilon(1e-10));
      CHECK(p.pressure == doctest::Approx(std::log(p.H)).epsilon(1e-12));
      CHECK(p.irreducible);
      CHECK(p.left_right_diff < 1e-10);
    }
  }
  // An anisotropic potential, where windows carry different weights.
  const auto t = StepDistribution::parse(f2, "table:a1=0.2;A1=0.2;a2=0.2;A2=0.2;a1 a2=0.1;A2 A1=0.1");
  const auto phi = build_potential(GreenTable::make(t, 1.0, 6, spectral_radius(t)), 2);
  const auto m = transfer_matrix(phi, a);
  CHECK(pressure(m).H == doctest::Approx(dense_spectral_radius(m)).epsilon(1e-10));
}

TEST_CASE("period and reducibility of hand-built matrices") {
  const auto cycle = from_edges(2, {{0, 1, 2.0}, {1, 0, 0.5}});
  CHECK(graph_period(cycle) == 2);
  CHECK(strongly_connected(cycle));
  CHECK(pressure(cycle).H == doctest::Approx(1.0));
  const auto three = from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 8.0}});
  CHECK(graph_period(three) == 3);
  CHECK(pressure(three).H == doctest::Approx(2.0));
  const auto mixed = from_edges(2, {{0, 1, 1.0}, {1, 0, 1.0}, {0, 0, 1.0}});
  CHECK(graph_period(mixed) == 1);
  CHECK(pressure(mixed).H == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0));
  const auto split = from_edges(2, {{0, 1, 1.0}, {0, 0, 1.0}, {1, 1, 1.0}});
  CHECK_FALSE(strongly_connected(split));
  CHECK_THROWS_AS(pressure(split), Error);
}

TEST_CASE("sphere sums from the transfer operator") {
  const Automaton a(f2);
  const auto mu = StepDistribution::simple(f2);
  const auto rho = spectral_radius(mu);
  for (double r : {1.0, 1.07, 1.15}) {
    const auto s = sphere_green_series(mu, r, 30, rho);
    for (int h : {0, 1, 2}) {
      const auto table = GreenTable::radial(mu, r, 32);
      const auto phi = build_potential(table, h);
      const auto m = transfer_matrix(phi, a);
      for (int n = h + 1; n <= 30; ++n)
        CHECK(transfer_sphere_sum(phi, m, n) == doctest::Approx(s.H[static_cast<std::size_t>(n)]).epsilon(1e-11));
      CHECK(verify_Hnr_identity(table, phi, a, 25) < 1e-12);
      CHECK_THROWS_AS(transfer_sphere_sum(phi, m, h), InvalidArgument);
    }
  }
  const auto small = GreenTable::radial(mu, 1.0, 3);
  CHECK_THROWS_AS(build_potential(small, 3), InvalidArgument);
  CHECK_THROWS_AS(verify_Hnr_identity(small, build_potential(small, 0), a, 10), InvalidArgument);
}

TEST_CASE("pressure growth agrees with sphere series on several groups") {
  for (const auto& mu : {StepDistribution::simple(f2), StepDistribution::simple(GroupModel::free_product_z2(4)),
                         StepDistribution::lazy(GroupModel::free_group(3), 0.25)}) {
    const auto rho = spectral_radius(mu);
    for (double f : {0.0, 0.5, 1.0}) {
      const double r = 1.0 + f * (1.0 / rho.inflated() - 1.0);
      const double hs = sphere_green_series(mu, r, 200, rho).H_estimate;
      CHECK(pressure_growth(mu, r, rho) == doctest::Approx(hs).epsilon(1e-10));
    }
    CHECK(pressure_growth(mu, 1.0, rho) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("refined pressure stabilises for a short-range anisotropic law") {
  const auto t = StepDistribution::parse(f2, "table:a1=0.2;A1=0.2;a2=0.2;A2=0.2;a1 a2=0.1;A2 A1=0.1");
  const auto rho = spectral_radius(t);
  const auto rp = refined_pressure(t, 1.0, rho, 1, 1e-3, 5);
  CHECK(rp.horizon >= 1);
  CHECK(rp.by_horizon.size() >= 2);
  CHECK(rp.converged == (rp.last_change < 1e-3));
  // At r = 1 the growth of G-mass over spheres is exactly 1.
  CHECK(rp.result.H == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("dyadic grids and exponent fit guards") {
  const auto g = dyadic_grid(1.2, 1, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(1.1));
  CHECK(g[2] == doctest::Approx(1.175));
  const auto mu = StepDistribution::simple(f2);
  const auto rho = spectral_radius(mu);
  const double rc = 1.0 / rho.inflated();
  CHECK_THROWS_AS(critical_exponent_fit(mu, rho, dyadic_grid(rc, 1, 8)), InvalidArgument);
  CHECK_THROWS_AS(eta_exponent_fit(mu, rho, dyadic_grid(rc, 6, 9)), InvalidArgument);
  const auto f = critical_exponent_fit(mu, rho, dyadic_grid(rc, 6, 14));
  CHECK(f.slope == doctest::Approx(0.5).epsilon(0.05));
  CHECK(f.r.size() == 9);
}

TEST_CASE("H(r) is increasing and bounded by the square root of the growth") {
  const auto mu = StepDistribution::simple(GroupModel::free_group(3));
  const auto rho = spectral_radius(mu);
  const double rc = 1.0 / rho.inflated();
  double prev = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const double h = pressure_growth(mu, 1.0 + (rc - 1.0) * i / 40.0, rho);
    CHECK(h > prev);
    CHECK(h <= std::sqrt(5.0) + 1e-9);
    prev = h;
  }
  CHECK(prev == doctest::Approx(std::sqrt(5.0)).epsilon(1e-3));
}
