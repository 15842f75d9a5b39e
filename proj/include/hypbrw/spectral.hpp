#pragma once

// Geodesic automaton, cylinder potentials built from Green ratios, and the
// transfer operator whose dominant eigenvalue is the growth rate H(r).

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "hypbrw/green.hpp"

namespace hypbrw {

/// State 0 is the initial state; state 1 + s is "last letter read was s".
class Automaton {
 public:
  explicit Automaton(const GroupModel& g);

  const GroupModel& group() const { return group_; }
  int num_states() const { return group_.alphabet_size() + 1; }
  static constexpr int initial() { return 0; }
  /// Target state after reading s, or -1 if the edge does not exist.
  int next(int state, Letter s) const;
  int out_degree(int state) const;
  /// Number of label paths of length n from the initial state.
  std::uint64_t count_paths(int n) const;

 private:
  GroupModel group_;
};

struct AutomatonAudit {
  bool accessible = false;
  /// Every accepted word of length <= radius is a geodesic.
  bool geodesic = false;
  /// Accepted words of length n are exactly the elements of S_n.
  bool bijective = false;
  bool strongly_connected = false;
  int radius = 0;
};
AutomatonAudit audit_automaton(const Automaton& a, int radius = 8);

/// Builds the automaton and throws if any audit property fails.
Automaton build_automaton(const GroupModel& g);

/// phi_r(u) = log G(e, u) - log G(e, sigma u) on windows u of h + 1 letters.
struct CylinderPotential {
  int horizon = 0;
  double r = 0.0;
  double G_ee = 0.0;
  std::vector<Word> windows;
  std::vector<double> phi;
  /// G(e, u) / G(e, e), closing the telescoping product at the last window.
  std::vector<double> terminal;
  std::unordered_map<Word, int, WordHash> index;
};
CylinderPotential build_potential(const GreenTable& g, int horizon);

/// Sparse nonnegative matrix on windows: M[u][v] = e^{phi(u)} when v follows u.
struct TransferMatrix {
  int dim = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;
  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  void apply_transpose(const std::vector<double>& x, std::vector<double>& y) const;
};
TransferMatrix transfer_matrix(const CylinderPotential& phi, const Automaton& a);

struct PowerOptions {
  double tol = 1e-12;
  int max_iterations = 100'000;
};

struct PressureResult {
  double pressure = 0.0;
  double H = 0.0;
  std::vector<double> dominant_vector;
  std::vector<double> left_vector;
  /// |lambda_2| / lambda_1 estimate.
  double gap = 0.0;
  int period = 1;
  bool irreducible = false;
  /// Relative difference of the eigenvalue from left and right iteration.
  double left_right_diff = 0.0;
  int iterations = 0;
};
PressureResult pressure(const CylinderPotential& phi, const Automaton& a, const PowerOptions& opt = {});
PressureResult pressure(const TransferMatrix& m, const PowerOptions& opt = {});

/// Cycle-length gcd of a strongly connected transition graph.
int graph_period(const TransferMatrix& m);
bool strongly_connected(const TransferMatrix& m);

/// G(e,e) 1^T M^{n-h-1} T, equal to H_n(r) when phi is exact.
double transfer_sphere_sum(const CylinderPotential& phi, const TransferMatrix& m, int n);
/// |H_n - transfer_sphere_sum| / H_n with H_n summed directly from the table.
double verify_Hnr_identity(const GreenTable& g, const CylinderPotential& phi, const Automaton& a, int n);

struct RefinedPressure {
  PressureResult result;
  int horizon = 0;
  /// |Pr(h) - Pr(h-1)| at the accepted horizon.
  double last_change = 0.0;
  /// last_change < tol before h_max was exceeded.
  bool converged = false;
  std::vector<double> by_horizon;
};
/// Raises the horizon from h0 until successive pressures differ by < tol.
RefinedPressure refined_pressure(const StepDistribution& mu, double r, const SpectralRadiusEstimate& rho, int h0 = 2,
                                 double tol = 1e-4, int h_max = 6);

/// H(r) by pressure: h = 0 for isotropic walks, refined horizon otherwise.
double pressure_growth(const StepDistribution& mu, double r, const SpectralRadiusEstimate& rho);

struct ExponentFit {
  double slope = 0.0;
  double C_hat = 0.0;
  double slope_se = 0.0;
  double residual = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double r_c = 0.0;
  std::vector<double> r;
  std::vector<double> y;
};

/// r_c - 2^{-j} (r_c - 1) for j = j_lo, j_lo + step, ..., j_hi.
std::vector<double> dyadic_grid(double r_c, double j_lo, double j_hi, double step = 1.0);

struct ExponentOptions {
  /// Every grid point must satisfy r_c - r <= window_fraction * (r_c - 1).
  double window_fraction = 0.125;
  std::size_t min_points = 6;
};

/// Slope of log(H(r_c) - H(r)) against log(r_c - r), r_c = 1 / rho_inflated.
ExponentFit critical_exponent_fit(const StepDistribution& mu, const SpectralRadiusEstimate& rho,
                                  const std::vector<double>& r_grid, const ExponentOptions& opt = {});
/// Slope of log eta(r) against log(r_c - r).
ExponentFit eta_exponent_fit(const StepDistribution& mu, const SpectralRadiusEstimate& rho,
                             const std::vector<double>& r_grid, const ExponentOptions& opt = {});

}  // namespace hypbrw
