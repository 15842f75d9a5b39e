#pragma once

#include <cstdint>
#include <vector>

#include "hypbrw/step_distribution.hpp"
#include "hypbrw/word_table.hpp"

namespace hypbrw {

/// The one-dimensional chain |Y_n| for an isotropic nearest-neighbour walk on
/// the d-regular tree: stay with prob stay, and from k >= 1 move to each of
/// the d-1 outer neighbours or the single inner one with prob per_neighbor.
struct RadialChain {
  int degree;
  double stay;
  double per_neighbor;

  static RadialChain from(const StepDistribution& mu);
  double down() const { return per_neighbor; }
  double up() const { return per_neighbor * (degree - 1); }
};

/// p_n(e, x) for |x| = k, n = 0..N.  Rows are stored rescaled (max entry 1)
/// with a per-row log scale, so deep rows do not underflow at small k.
class RadialHeatKernel {
 public:
  RadialHeatKernel(const StepDistribution& mu, int N);

  int depth() const { return static_cast<int>(rows_.size()) - 1; }
  double q(int n, int k) const;
  double log_q(int n, int k) const;
  /// Sum over |x| = k of p_n(e, x).
  double sphere_mass(int n, int k) const;
  /// Sum over all x, accumulated in long double; 1 up to rounding.
  double row_sum(int n) const;

 private:
  GroupModel group_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> log_scale_;
};

/// Advances per-vertex radial values one step: out[k] = sum_j P(k -> j) in[j]
/// in the per-vertex normalization.  out must have size in.size() + 1.
void radial_step(const RadialChain& c, const std::vector<double>& in, std::vector<double>& out);

/// The transition operator of a general step law restricted to B(e, radius);
/// mass that leaves the ball is dropped.
class BallOperator {
 public:
  BallOperator(const StepDistribution& mu, int radius, std::uint64_t budget);

  const WordTable& table() const { return table_; }
  const StepDistribution& law() const { return mu_; }
  int radius() const { return radius_; }
  std::size_t size() const { return table_.size(); }
  WordId find(const Word& w) const { return table_.find(w); }
  /// out[y] = sum_x in[x] mu(x^{-1} y).
  void push(const std::vector<double>& in, std::vector<double>& out) const;
  WordId target(std::size_t x, std::size_t atom) const { return targets_[x * probs_.size() + atom]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  StepDistribution mu_;
  int radius_;
  WordTable table_;
  std::vector<WordId> targets_;
  std::vector<double> probs_;
};

/// p_n(e, x) for all x in B(e, N * max_step), n = 0..N, by direct convolution.
class BallHeatKernel {
 public:
  BallHeatKernel(const StepDistribution& mu, int N, std::uint64_t budget = 4'000'000);

  int depth() const { return static_cast<int>(rows_.size()) - 1; }
  double p(int n, const Word& x) const;
  double row_sum(int n) const;
  const BallOperator& op() const { return op_; }

 private:
  BallOperator op_;
  std::vector<std::vector<double>> rows_;
};

struct SpectralRadiusOptions {
  /// Number of even return times used (returns up to time 2 * depth).
  int depth = 2000;
  double tol = 1e-6;
  std::uint64_t budget = 4'000'000;
};

struct SpectralRadiusEstimate {
  double rho_hat = 0.0;
  double residual = 0.0;
  bool converged = false;
  int depth = 0;
  /// Diagnostics indexed by m = 1..depth: a_m = p_{2m}(e,e)^{1/2m}, the
  /// Aitken extrapolant of a, and the corrected-ratio Richardson estimate.
  std::vector<double> a;
  std::vector<double> aitken;
  std::vector<double> extrapolant;

  /// rho_hat pushed up by the residual; 1/inflated is a safe lower estimate
  /// of the critical weight.
  double inflated() const { return rho_hat + residual; }
};

/// Log return probabilities log p_{2m}(e, e), m = 0..depth.
std::vector<double> log_even_returns(const StepDistribution& mu, int depth, std::uint64_t budget = 4'000'000);

SpectralRadiusEstimate spectral_radius(const StepDistribution& mu, const SpectralRadiusOptions& opt = {});

}  // namespace hypbrw
