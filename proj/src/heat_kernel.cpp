#include "hypbrw/heat_kernel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"

namespace hypbrw {

RadialChain RadialChain::from(const StepDistribution& mu) {
  if (!mu.is_isotropic()) throw InvalidArgument("radial engine needs an isotropic nearest-neighbour walk");
  const int d = mu.group().alphabet_size();
  return RadialChain{d, mu.laziness(), (1.0 - mu.laziness()) / d};
}

void radial_step(const RadialChain& c, const std::vector<double>& in, std::vector<double>& out) {
  const std::size_t K = in.size();
  out.assign(K + 1, 0.0);
  const double outer = c.per_neighbor * (c.degree - 1);
  for (std::size_t k = 0; k <= K; ++k) {
    const double here = k < K ? in[k] : 0.0;
    const double inner = k >= 1 && k - 1 < K ? in[k - 1] : 0.0;
    const double next = k + 1 < K ? in[k + 1] : 0.0;
    if (k == 0)
      out[0] = c.stay * here + c.per_neighbor * c.degree * next;
    else
      out[k] = c.stay * here + c.per_neighbor * inner + outer * next;
  }
}

namespace {

double rescale(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  if (!(m > 0.0)) throw Error("heat kernel row vanished");
  for (double& x : v) x /= m;
  return std::log(m);
}

}  // namespace

RadialHeatKernel::RadialHeatKernel(const StepDistribution& mu, int N) : group_(mu.group()) {
  if (N < 0) throw InvalidArgument("heat kernel depth must be nonnegative");
  const auto chain = RadialChain::from(mu);
  rows_.reserve(static_cast<std::size_t>(N) + 1);
  rows_.push_back({1.0});
  log_scale_.push_back(0.0);
  std::vector<double> next;
  for (int n = 1; n <= N; ++n) {
    radial_step(chain, rows_.back(), next);
    const double s = rescale(next);
    log_scale_.push_back(log_scale_.back() + s);
    rows_.push_back(next);
  }
}

double RadialHeatKernel::log_q(int n, int k) const {
  const double v = q(n, k);
  return v > 0.0 ? std::log(v) : -INFINITY;
}

double RadialHeatKernel::q(int n, int k) const {
  if (n < 0 || n > depth()) throw InvalidArgument(fmt::format("time {} outside kernel depth {}", n, depth()));
  const auto& row = rows_[static_cast<std::size_t>(n)];
  if (k < 0 || static_cast<std::size_t>(k) >= row.size()) return 0.0;
  const double v = row[static_cast<std::size_t>(k)];
  if (v == 0.0) return 0.0;
  return std::exp(std::log(v) + log_scale_[static_cast<std::size_t>(n)]);
}

double RadialHeatKernel::sphere_mass(int n, int k) const {
  const double v = q(n, k);
  if (v == 0.0) return 0.0;
  return std::exp(std::log(v) + group_.log_sphere_size(k));
}

double RadialHeatKernel::row_sum(int n) const {
  long double total = 0.0L;
  const auto& row = rows_.at(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < row.size(); ++k) total += sphere_mass(n, static_cast<int>(k));
  return static_cast<double>(total);
}

BallOperator::BallOperator(const StepDistribution& mu, int radius, std::uint64_t budget)
    : mu_(mu), radius_(radius), table_(mu.group()) {
  if (radius < 0) throw InvalidArgument("ball radius must be nonnegative");
  const auto need = mu.group().ball_size(radius);
  if (need > budget)
    throw BudgetExceeded(fmt::format("ball B(e,{}) has {} elements, budget is {}", radius, need, budget));
  table_.fill_ball(radius);
  for (const auto& a : mu.atoms()) probs_.push_back(a.prob);
  const std::size_t A = probs_.size();
  targets_.assign(table_.size() * A, no_word);
  for (std::size_t x = 0; x < table_.size(); ++x) {
    for (std::size_t j = 0; j < A; ++j) {
      WordId y = static_cast<WordId>(x);
      for (Letter s : mu.atoms()[j].word) {
        y = table_.find_step(y, s);
        if (y == no_word) break;
      }
      targets_[x * A + j] = y;
    }
  }
}

void BallOperator::push(const std::vector<double>& in, std::vector<double>& out) const {
  out.assign(size(), 0.0);
  const std::size_t A = probs_.size();
  for (std::size_t x = 0; x < in.size(); ++x) {
    const double v = in[x];
    if (v == 0.0) continue;
    const WordId* t = &targets_[x * A];
    for (std::size_t j = 0; j < A; ++j)
      if (t[j] != no_word) out[static_cast<std::size_t>(t[j])] += v * probs_[j];
  }
}

BallHeatKernel::BallHeatKernel(const StepDistribution& mu, int N, std::uint64_t budget)
    : op_(mu, N * mu.max_step(), budget) {
  std::vector<double> row(op_.size(), 0.0);
  row[0] = 1.0;
  rows_.push_back(row);
  std::vector<double> next;
  for (int n = 1; n <= N; ++n) {
    op_.push(rows_.back(), next);
    rows_.push_back(next);
  }
}

double BallHeatKernel::p(int n, const Word& x) const {
  if (n < 0 || n > depth()) throw InvalidArgument(fmt::format("time {} outside kernel depth {}", n, depth()));
  const WordId id = op_.find(x);
  if (id == no_word) return 0.0;
  return rows_[static_cast<std::size_t>(n)][static_cast<std::size_t>(id)];
}

double BallHeatKernel::row_sum(int n) const {
  long double total = 0.0L;
  for (double v : rows_.at(static_cast<std::size_t>(n))) total += v;
  return static_cast<double>(total);
}

std::vector<double> log_even_returns(const StepDistribution& mu, int depth, std::uint64_t budget) {
  if (depth < 1) throw InvalidArgument("spectral radius needs depth >= 1");
  std::vector<double> out{0.0};
  if (mu.is_isotropic()) {
    const auto chain = RadialChain::from(mu);
    std::vector<double> cur{1.0}, next;
    double log_scale = 0.0;
    const int T = 2 * depth;
    for (int n = 1; n <= T; ++n) {
      radial_step(chain, cur, next);
      // Radii beyond T - n cannot return to e by time T.
      const auto keep = static_cast<std::size_t>(std::min(n, T - n)) + 1;
      if (next.size() > keep) next.resize(keep);
      log_scale += rescale(next);
      cur.swap(next);
      if (n % 2 == 0) out.push_back(cur[0] > 0.0 ? std::log(cur[0]) + log_scale : -INFINITY);
    }
    return out;
  }
  // p_{2m}(e,e) = sum_x p_m(e,x)^2 for symmetric mu.
  BallOperator op(mu, depth * mu.max_step(), budget);
  std::vector<double> cur(op.size(), 0.0), next;
  cur[0] = 1.0;
  for (int m = 1; m <= depth; ++m) {
    op.push(cur, next);
    cur.swap(next);
    long double s = 0.0L;
    for (double v : cur) s += static_cast<long double>(v) * v;
    out.push_back(s > 0.0L ? std::log(static_cast<double>(s)) : -INFINITY);
  }
  return out;
}

SpectralRadiusEstimate spectral_radius(const StepDistribution& mu, const SpectralRadiusOptions& opt) {
  int depth = opt.depth;
  if (!mu.is_isotropic()) {
    // The general engine needs B(e, depth * max_step); shrink depth to the budget.
    while (depth > 4 && mu.group().ball_size(depth * mu.max_step()) > opt.budget) --depth;
  }
  if (depth < 4) throw InvalidArgument("spectral radius needs depth >= 4");
  const auto lp = log_even_returns(mu, depth, opt.budget);

  SpectralRadiusEstimate est;
  est.depth = depth;
  est.a.assign(static_cast<std::size_t>(depth) + 1, NAN);
  est.aitken.assign(static_cast<std::size_t>(depth) + 1, NAN);
  est.extrapolant.assign(static_cast<std::size_t>(depth) + 1, NAN);
  for (int m = 1; m <= depth; ++m) est.a[static_cast<std::size_t>(m)] = std::exp(lp[static_cast<std::size_t>(m)] / (2.0 * m));
  for (int m = 3; m <= depth; ++m) {
    const auto i = static_cast<std::size_t>(m);
    const double d1 = est.a[i] - est.a[i - 1];
    const double d2 = est.a[i] - 2 * est.a[i - 1] + est.a[i - 2];
    est.aitken[i] = d2 != 0.0 ? est.a[i] - d1 * d1 / d2 : est.a[i];
  }

  // p_{2m} ~ C rho^{2m} m^{-3/2}: the corrected one-step ratio b_m converges to
  // rho like 1/m^2, and one Richardson step removes that term.
  auto b = [&](int m) {
    const double r = 0.5 * (lp[static_cast<std::size_t>(m) + 1] - lp[static_cast<std::size_t>(m)]);
    return std::exp(r + 0.75 * std::log1p(1.0 / m));
  };
  auto richardson = [&](int m) { return (4.0 * b(m) - b(m / 2)) / 3.0; };
  for (int m = 2; m < depth; m += 2) est.extrapolant[static_cast<std::size_t>(m)] = richardson(m);

  int M = depth - 1;
  if (M % 2 == 1) --M;
  if (M % 4 != 0) M -= 2;
  est.rho_hat = richardson(M);
  est.residual = std::abs(est.rho_hat - richardson(M / 2));
  est.converged = est.residual <= opt.tol;
  if (!(est.rho_hat > 0.0 && est.rho_hat < 1.0))
    throw NotConverged(fmt::format("spectral radius estimate {} outside (0, 1)", est.rho_hat));
  return est;
}

}  // namespace hypbrw
