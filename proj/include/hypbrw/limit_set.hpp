#pragma once

// Boundary samples from BRW traces and two dimension estimates of the limit
// set: shadow covers (box counting) and pair statistics of deep particles.

#include <cstdint>
#include <string>
#include <vector>

#include "hypbrw/brw.hpp"

namespace hypbrw {

struct BoundarySampleSet {
  /// Distinct prefixes, grouped by run.
  std::vector<BoundaryPrefix> samples;
  std::vector<int> run;
  int prefix_length = 0;
  double a = 0.0;
};

/// floor(0.8 * l * depth) with l the 5th percentile of |X_u| / depth over
/// the final generation of the traces.
int default_prefix_length(const std::vector<TraceRecord>& traces);

/// Length-k prefixes of the final generation (trace needs keep_radius > 0).
/// Throws InvalidArgument if a particle sits closer than k to the identity.
BoundarySampleSet sample_boundary(const TraceRecord& t, int k, double a, int run_id = 0);
/// Union over runs; pairs are only formed within a run.
BoundarySampleSet sample_boundary(const std::vector<TraceRecord>& traces, int k, double a);
/// i.i.d. uniform points of the whole boundary, as length-k prefixes.
BoundarySampleSet uniform_boundary_samples(const GroupModel& g, int count, int k, double a, std::uint64_t seed);

struct CoverEstimate {
  double eps = 0.0;
  std::vector<int> k;
  /// Length of the shadow prefix, ceil(k (1 - eps)).
  std::vector<int> prefix_length;
  std::vector<std::uint64_t> N;
};

/// N_k = number of distinct length-ceil(k(1-eps)) prefixes among the points
/// of P_k, k = 1..k_max, with P pooled over the traces.
CoverEstimate shadow_cover_counts(const std::vector<TraceRecord>& traces, double eps, int k_max);
/// The same counts for the full spheres S_k.
CoverEstimate full_boundary_cover(const GroupModel& g, double eps, int k_max);

enum class DimensionMethod { box, correlation, energy };

struct DimensionEstimate {
  DimensionMethod method = DimensionMethod::box;
  double value = 0.0;
  double stderr_ = 0.0;
  double residual = 0.0;
  int lo = 0;
  int hi = 0;
};

std::string to_string(DimensionMethod m);

/// Slope of log N_k against prefix_length(k) log a over k in [k_lo, k_hi].
/// Needs >= 10 scales.  Clamped below at 0.
DimensionEstimate box_dimension(const CoverEstimate& cover, double a, int k_lo, int k_hi);

/// Within-run pair correlation C(l) = share of pairs whose Gromov product is
/// >= l.  Slope of -log C(l) against l log a over l in [l_lo, l_hi]; the
/// report uses the middle third of [0, prefix_length].  Sample
/// sets with at most one point per run have dimension 0.  Otherwise needs
/// >= 1000 pairs.
DimensionEstimate correlation_dimension(const BoundarySampleSet& s, int l_lo, int l_hi);
/// C(l) for l = 0..prefix_length.
std::vector<double> pair_correlation(const BoundarySampleSet& s, std::uint64_t* pairs = nullptr);

/// Largest h on the grid whose pair energy mean a^{h <xi, xi'>} changes by
/// < 20% when the prefixes are doubled from floor(k/2) to k.
DimensionEstimate energy_threshold_dimension(const BoundarySampleSet& s, const std::vector<double>& h_grid);

struct DimensionRow {
  double lambda = 0.0;
  double H = 0.0;
  double h_target = 0.0;
  DimensionEstimate box;
  DimensionEstimate corr;
  int replicas = 0;
  int generations = 0;
  int prefix_length = 0;
  int truncated = 0;
  /// lambda at the critical weight: h_target is conjectural there.
  bool conjectural = false;
};

struct DimensionConfig {
  StepDistribution mu;
  std::vector<double> lambdas;
  double a = 2.718281828459045;
  int replicas = 40;
  std::uint64_t seed = 42;
  int threads = 1;
  /// Offspring law family, as accepted by OffspringDistribution::parse.
  std::string offspring = "two_point:2";
  /// Generations: min(max_generation, ceil(log(final_population) / log lambda)).
  double final_population = 1e5;
  int max_generation = 240;
  /// Trace spheres up to settle_fraction * generations count as complete.
  double settle_fraction = 0.2;
  double eps = 0.1;
  std::uint64_t population_budget = 10'000'000;
};

int generations_for(const DimensionConfig& cfg, double lambda);

/// One row per lambda; throws RegimeError for lambda above 1/rho.
std::vector<DimensionRow> dimension_report(const DimensionConfig& cfg, const SpectralRadiusEstimate& rho,
                                           std::vector<CoverEstimate>* covers = nullptr);

}  // namespace hypbrw
