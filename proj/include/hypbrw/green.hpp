#pragma once

// Weighted Green functions G_r(x, y) = sum_n r^n p_n(x, y).
//
// Isotropic nearest-neighbour walks use RadialGreen: the Green function of the
// walk killed outside B(e, L) obeys a two-term recursion in the radius, and
// seeding that recursion at radius L with 0 resp. with 1/sqrt(d-1) gives a
// lower resp. upper bound for the infinite-tree value.  L is doubled until the
// bracket is tight.  General step laws use BallGreen, a Neumann series on a
// finite ball.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "hypbrw/heat_kernel.hpp"

namespace hypbrw {

struct GreenValue {
  double value = 0.0;
  double error_bound = 0.0;
  /// The error bound rests on a fitted or extrapolated model, not a proof.
  bool heuristic = false;
};

struct GreenOptions {
  /// Target relative error.
  double tol = 1e-13;
  /// Largest bracket length tried by the radial engine is 2^max_log2_length.
  int max_log2_length = 26;
  /// Term cap for time series.
  int max_terms = 20000;
  std::uint64_t budget = 4'000'000;
};

/// Throws InvalidArgument unless 1 <= r <= 1/rho_hat.
void check_weight(double r, const SpectralRadiusEstimate& rho);

class RadialGreen {
 public:
  /// Values for radii 0..K.  r may be any positive weight up to the critical
  /// one; beyond it the recursion breaks down and RegimeError is thrown.
  RadialGreen(const StepDistribution& mu, double r, int K, const GreenOptions& opt = {});

  double r() const { return r_; }
  int max_radius() const { return static_cast<int>(t_lo_.size()); }
  int degree() const { return chain_.degree; }
  /// Bracket length used.
  long length() const { return length_; }
  bool converged() const { return converged_; }

  GreenValue at(int k) const;
  double value(int k) const { return at(k).value; }
  double log_value(int k) const;
  double log_lower(int k) const;
  double log_upper(int k) const;
  /// u[k+1] / u[k] (bracket midpoint).
  double ratio(int k) const;
  double ratio_upper(int k) const { return t_hi_.at(static_cast<std::size_t>(k)); }

 private:
  RadialChain chain_;
  double r_;
  long length_ = 0;
  bool converged_ = false;
  double log_u0_lo_ = 0.0, log_u0_hi_ = 0.0;
  std::vector<double> t_lo_, t_hi_;
  std::vector<double> log_lo_, log_hi_;
};

/// Green function of the walk on B(e, radius) with killing outside, by the
/// Neumann series sum_n r^n P^n delta_e.
class BallGreen {
 public:
  BallGreen(const StepDistribution& mu, double r, int radius, const SpectralRadiusEstimate& rho,
            const GreenOptions& opt = {});

  double r() const { return r_; }
  int radius() const { return op_.radius(); }
  int terms() const { return terms_; }
  const BallOperator& op() const { return op_; }
  /// G(e, x) restricted to the ball; throws if x lies outside.
  GreenValue at(const Word& x) const;
  bool contains(const Word& x) const { return op_.find(x) != no_word; }

 private:
  BallOperator op_;
  double r_;
  int terms_ = 0;
  double time_tail_ = 0.0;
  double escape_ = 0.0;
  bool heuristic_ = false;
  std::vector<double> values_;
};

/// Values G_r(e, x) for either engine.  G_r(x, y) = G_r(e, x^{-1} y).
class GreenTable {
 public:
  static GreenTable radial(const StepDistribution& mu, double r, int K, const GreenOptions& opt = {});
  static GreenTable ball(const StepDistribution& mu, double r, int radius, const SpectralRadiusEstimate& rho,
                         const GreenOptions& opt = {});
  /// Radial engine for isotropic laws, ball engine otherwise.
  static GreenTable make(const StepDistribution& mu, double r, int radius, const SpectralRadiusEstimate& rho,
                         const GreenOptions& opt = {});

  double r() const { return r_; }
  const GroupModel& group() const { return group_; }
  bool isotropic() const { return radial_ != nullptr; }
  int max_radius() const;
  GreenValue at(const Word& x) const;
  double value(const Word& x) const { return at(x).value; }
  double value(const Word& x, const Word& y) const;
  const RadialGreen& radial_engine() const { return *radial_; }

 private:
  GreenTable(const GroupModel& g, double r) : group_(g), r_(r) {}
  GroupModel group_;
  double r_;
  std::shared_ptr<const RadialGreen> radial_;
  std::shared_ptr<const BallGreen> ball_;
};

/// G_r(e, x) with the step law's natural engine and the given tolerance.
GreenValue green(const StepDistribution& mu, double r, const Word& x, const SpectralRadiusEstimate& rho,
                 double tol = 1e-12);

/// Time-series evaluation for isotropic walks: sum_{n<=N} r^n p_n(e, x_k) for
/// k = 0..K, N chosen from the certified tail (r rho)^{N+1}/(1 - r rho) < tol.
/// When r rho is too close to 1 for the budget, the tail is modelled as
/// C (r rho)^n n^{-3/2} with C fitted to the last 50 nonzero terms and the
/// result is flagged heuristic.
struct GreenSeries {
  double r = 0.0;
  int terms = 0;
  std::vector<GreenValue> values;
};
GreenSeries green_time_series(const StepDistribution& mu, double r, int K, const SpectralRadiusEstimate& rho,
                              const GreenOptions& opt = {});

/// First-passage generating function of the isotropic nearest-neighbour walk
/// on the degree-d tree, from its quadratic.  Independent of both engines;
/// meant for cross-checks.
double first_passage_closed_form(int degree, double p0, double r);
/// G_r(e, x) for |x| = k from first_passage_closed_form.
double green_closed_form_tree(const StepDistribution& mu, double r, int k);

/// Paths x = g_0, ..., g_n = y whose interior points g_1..g_{n-1} lie in A.
struct Region {
  enum class Kind { whole, bounded, windowed };
  Kind kind = Kind::whole;
  std::function<bool(const Word&)> contains;
  /// bounded: A lies inside B(e, radius).  windowed: A is replaced by
  /// A intersected with B(e, radius), a lower bound with heuristic error.
  int radius = 0;

  static Region whole() { return {}; }
  static Region bounded(std::function<bool(const Word&)> f, int radius) {
    return {Kind::bounded, std::move(f), radius};
  }
  static Region windowed(std::function<bool(const Word&)> f, int radius) {
    return {Kind::windowed, std::move(f), radius};
  }
};

GreenValue restricted_green(const StepDistribution& mu, double r, const Word& x, const Word& y, const Region& A,
                            const SpectralRadiusEstimate& rho, double tol = 1e-12);

struct SphereGreenSeries {
  double r = 0.0;
  std::vector<double> log_H;
  std::vector<double> H;
  double H_estimate = 0.0;
  double G_ee = 0.0;
  double sub_const = 0.0;
  double super_const = 0.0;
  /// Same constants restricted to m, n >= 1.
  double sub_const_interior = 0.0;
  double super_const_interior = 0.0;
};

/// H_n(r) = sum_{|x| = n} G_r(e, x), n = 0..N.
SphereGreenSeries sphere_green_series(const StepDistribution& mu, double r, int N, const SpectralRadiusEstimate& rho,
                                      const GreenOptions& opt = {});

struct MultiplicativityConstants {
  double sub_const;
  double super_const;
  double sub_interior;
  double super_interior;
};
/// Smallest C with H_{m+n} <= C H_m H_n and largest C with H_{m+n} >= C H_m H_n
/// over m + n <= N; the interior pair restricts to m, n >= 1.
MultiplicativityConstants multiplicativity_constants(const SphereGreenSeries& s);
MultiplicativityConstants multiplicativity_constants(const SphereGreenSeries& s, int N);

/// eta(r) = sum_y G_r(e, y) G_r(y, e).
GreenValue eta(const StepDistribution& mu, double r, const SpectralRadiusEstimate& rho,
               const GreenOptions& opt = {});

struct DerivativeCheck {
  double fd_h = 0.0;
  double fd_h2 = 0.0;
  double fd_richardson = 0.0;
  double rhs = 0.0;
  double rel_error = 0.0;
  double rel_error_h2 = 0.0;
  double rel_error_richardson = 0.0;
};
/// Central differences of r G_r(e, e) with steps h and h/2 against eta(r).
DerivativeCheck green_derivative_check(const StepDistribution& mu, double r, double h,
                                       const SpectralRadiusEstimate& rho);

/// sum_z G(e,z) G(z,x) G(z,y) for isotropic walks, summed exactly over the
/// tripod spanned by e, x, y and geometric tails off it.
double triple_green_sum(const RadialGreen& g, const GroupModel& group, const Word& x, const Word& y);
/// The same sum by brute force over z in B(e, z_radius) for any table.
double triple_green_sum_ball(const GreenTable& g, const Word& x, const Word& y, int z_radius);

struct TwoPointSum {
  double value = 0.0;
  double ratio = 0.0;
  std::uint64_t pairs = 0;
};
/// sum over x, y in S_n with d(x, y) = k of triple_green_sum(x, y), and its
/// ratio to H^{n + k/2}.
TwoPointSum two_point_sum(const StepDistribution& mu, double lambda, int n, int k, const SpectralRadiusEstimate& rho);

struct AnconaScan {
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  std::uint64_t triples = 0;
};
/// G(x,z) / (G(x,y) G(y,z)) over every geodesic triple with |x^{-1} z| <= n_max.
AnconaScan ancona_ratio_scan(const GreenTable& g, int n_max);

}  // namespace hypbrw
