#pragma once

// Generation-synchronous branching random walk indexed by a Galton-Watson
// tree: every particle dies and leaves k ~ nu children, each displaced by an
// independent mu-step.  Records the visited set P, the sphere counts M_n and
// visit multiplicities Z_x near the identity.

#include <cstdint>
#include <string>
#include <vector>

#include "hypbrw/green.hpp"
#include "hypbrw/numeric.hpp"
#include "hypbrw/word_table.hpp"

namespace hypbrw {

/// Offspring law on {1, ..., k_max}; nu(0) = 0 always.
class OffspringDistribution {
 public:
  /// pmf[k] = nu(k); pmf[0] must be 0.
  static OffspringDistribution from_pmf(std::vector<double> pmf);
  static OffspringDistribution deterministic_one();
  /// Support {1, k} with mean lambda.
  static OffspringDistribution two_point(int k, double lambda);
  /// "one", "two_point:k" (with lambda) or "pmf:p1,p2,...".
  static OffspringDistribution parse(const std::string& spec, double lambda);

  const std::vector<double>& pmf() const { return pmf_; }
  int k_max() const { return static_cast<int>(pmf_.size()) - 1; }
  double mean() const { return mean_; }
  /// sigma^2 = sum_k k^2 nu(k).
  double second_moment() const { return second_; }
  int sample(double u) const;
  std::string describe() const;

 private:
  explicit OffspringDistribution(std::vector<double> pmf);
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  double mean_ = 0.0;
  double second_ = 0.0;
};

struct BRWConfig {
  StepDistribution mu;
  OffspringDistribution nu;
  int max_generation = 60;
  /// Cumulative particle-steps allowed in one run.
  std::uint64_t population_budget = 10'000'000;
  std::uint64_t seed = 42;
  /// Z_x is counted for |x| <= record_depth.
  int record_depth = 6;
  /// The generation of the last visit to B(e, watch_radius) is recorded.
  int watch_radius = 2;
  /// Big-jump threshold: d(X_parent, X_child) > jump_eps |X_parent|.
  double jump_eps = 0.5;
  /// Drop particles that cannot re-enter B(e, record_depth) before
  /// max_generation.  Z_x stays exact; P and M_n far out do not.
  bool prune_far = false;
};

/// Throws InvalidArgument for malformed configs and RegimeError when
/// lambda > 1/rho_inflated (the recurrent regime is out of scope).
void validate_config(const BRWConfig& cfg, const SpectralRadiusEstimate& rho);

struct GenerationState {
  int m = 0;
  std::vector<WordId> particles;
};

struct GenerationStats {
  std::uint64_t children = 0;
  double min_speed = 0.0;
  double max_speed = 0.0;
  std::uint64_t big_jumps = 0;
};

/// One generation of branching and displacement.  Streams are keyed by
/// (seed, replica, m, particle index).
GenerationState step_generation(const GenerationState& state, const BRWConfig& cfg, std::uint64_t replica,
                                WordTable& table, GenerationStats* stats = nullptr);

struct TraceRecord {
  std::uint64_t replica = 0;
  /// Generations completed (the last one may be partial when truncated).
  int generations = 0;
  bool truncated = false;
  bool pruned = false;
  std::uint64_t particle_steps = 0;
  /// M_n = |P intersect S_n|, n = 0..max radius reached.
  std::vector<std::uint64_t> M;
  /// Z_x for x in B(e, record_depth), indexed in ball_words order.
  std::vector<std::uint64_t> Z;
  std::vector<std::uint64_t> population;
  std::vector<double> min_speed;
  std::vector<double> max_speed;
  std::vector<std::uint64_t> big_jumps;
  double jump_eps = 0.0;
  /// -1 if B(e, watch_radius) was never visited (cannot happen: e is).
  int last_watch_visit = -1;
  /// Filled when keep_radius > 0: visited points with |x| <= keep_radius in
  /// order of first visit, and the positions of the last generation.
  std::vector<Word> visited_words;
  std::vector<Word> final_particles;
};

/// One replica.  `table` is reused between calls; it is reset to the ball of
/// radius record_depth first.
TraceRecord run(const BRWConfig& cfg, std::uint64_t replica, WordTable& table, int keep_radius = 0);
TraceRecord run(const BRWConfig& cfg, std::uint64_t replica = 0, int keep_radius = 0);

/// Radius up to which P_n is treated as complete: floor(fraction * generations).
int settled_radius(const TraceRecord& t, double fraction);

struct GrowthEstimate {
  /// exp(slope) of log(mean M_n) against n, pooled over runs.
  double H_pooled = 0.0;
  double se_pooled = 0.0;
  /// Median over runs of exp(per-run slope).
  double H_median = 0.0;
  int n_lo = 0;
  int n_hi = 0;
  int runs_used = 0;
  int runs_truncated = 0;
  std::vector<double> mean_M;
};

/// Fits n in [n_lo, n_hi].  Truncated runs are excluded.  Throws
/// InvalidArgument with fewer than 20 radii or an empty M_n in the window.
GrowthEstimate growth_rate(const std::vector<TraceRecord>& runs, int n_lo, int n_hi);
/// Single trace, last half of [0, settled_radius(t, fraction)].
GrowthEstimate growth_rate(const TraceRecord& t, double fraction = 0.25);

struct RunSetOptions {
  int replicas = 20;
  int threads = 1;
  int keep_radius = 0;
};
/// Replicas 0..replicas-1 in parallel; output is in replica order.
std::vector<TraceRecord> run_replicas(const BRWConfig& cfg, const RunSetOptions& opt);

struct MomentReport {
  std::vector<Word> words;
  std::vector<MeanSe> first;
  /// Pairs (i, j), i <= j, over words with |x| <= pair_depth.
  std::vector<std::pair<int, int>> pairs;
  std::vector<MeanSe> second;
  int replicas = 0;
  int truncated_runs = 0;
};

/// First moments for every x in B(e, record_depth) and second moments for
/// pairs in B(e, pair_depth), from one set of replicas.  Aggregation is in
/// fixed blocks of replicas, so the result does not depend on `threads`.
MomentReport empirical_moments(const BRWConfig& cfg, int replicas, int pair_depth, int threads = 1);
MeanSe empirical_first_moment(const Word& x, int replicas, const BRWConfig& cfg, int threads = 1);
MeanSe empirical_second_moment(const Word& x, const Word& y, int replicas, const BRWConfig& cfg, int threads = 1);

/// sum_{n > N} lambda^n p_n(e, x): the part of G_lambda(e, x) a run stopped
/// after N generations cannot see.  Isotropic walks only.
double generation_tail(const StepDistribution& mu, double lambda, const Word& x, int N);

struct SpeedReport {
  double min_speed = 0.0;
  double max_speed = 0.0;
  std::uint64_t big_jumps_after = 0;
  int from = 0;
  int to = 0;
};
/// Speeds over generations [from, to] and eps-big jumps after generation
/// max(10, ceil(1/eps)).  Needs >= 30 generations.
SpeedReport speed_and_jump_report(const TraceRecord& t, int from, int to);
/// -log(lambda rho) / v.
double speed_lower_bound(const StepDistribution& mu, double lambda, const SpectralRadiusEstimate& rho);

}  // namespace hypbrw
