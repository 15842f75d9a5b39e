#include "hypbrw/limit_set.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"
#include "hypbrw/rng.hpp"
#include "hypbrw/spectral.hpp"

namespace hypbrw {

int default_prefix_length(const std::vector<TraceRecord>& traces) {
  std::vector<double> speeds;
  int depth = 0;
  for (const auto& t : traces) {
    if (t.generations == 0) continue;
    depth = std::max(depth, t.generations);
    for (const auto& w : t.final_particles) speeds.push_back(static_cast<double>(w.size()) / t.generations);
  }
  if (speeds.empty()) throw InvalidArgument("no final particles recorded");
  std::sort(speeds.begin(), speeds.end());
  const double l = speeds[static_cast<std::size_t>(0.05 * static_cast<double>(speeds.size() - 1))];
  return static_cast<int>(std::floor(0.8 * l * depth));
}

BoundarySampleSet sample_boundary(const TraceRecord& t, int k, double a, int run_id) {
  if (k < 1) throw InvalidArgument("prefix length must be >= 1");
  if (t.final_particles.empty()) throw InvalidArgument("trace kept no final generation");
  std::vector<Word> prefixes;
  for (const auto& w : t.final_particles)
    if (static_cast<int>(w.size()) >= k) prefixes.push_back(prefix(w, static_cast<std::size_t>(k)));
  if (prefixes.empty())
    throw InvalidArgument(fmt::format("insufficient depth: no particle of generation {} reaches |x| = {}",
                                      t.generations, k));
  std::sort(prefixes.begin(), prefixes.end());
  prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());
  BoundarySampleSet s;
  s.prefix_length = k;
  s.a = a;
  for (auto& p : prefixes) {
    s.samples.push_back({std::move(p), k});
    s.run.push_back(run_id);
  }
  return s;
}

BoundarySampleSet sample_boundary(const std::vector<TraceRecord>& traces, int k, double a) {
  BoundarySampleSet all;
  all.prefix_length = k;
  all.a = a;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto s = sample_boundary(traces[i], k, a, static_cast<int>(i));
    all.samples.insert(all.samples.end(), std::make_move_iterator(s.samples.begin()),
                       std::make_move_iterator(s.samples.end()));
    all.run.insert(all.run.end(), s.run.begin(), s.run.end());
  }
  return all;
}

BoundarySampleSet uniform_boundary_samples(const GroupModel& g, int count, int k, double a, std::uint64_t seed) {
  if (count < 1 || k < 1) throw InvalidArgument("need count >= 1 and k >= 1");
  const auto A = static_cast<std::uint64_t>(g.alphabet_size());
  std::vector<Word> pts;
  for (int i = 0; i < count; ++i) {
    CounterRng rng{seed, 0x626f756e64ULL, static_cast<std::uint64_t>(i)};
    std::vector<Letter> w;
    w.push_back(static_cast<Letter>(rng.next() % A));
    while (static_cast<int>(w.size()) < k) {
      // Uniform over the A - 1 letters that do not cancel the last one.
      auto s = static_cast<Letter>(rng.next() % (A - 1));
      if (s >= g.inverse(w.back())) ++s;
      w.push_back(s);
    }
    pts.emplace_back(std::move(w));
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  BoundarySampleSet s;
  s.prefix_length = k;
  s.a = a;
  for (auto& p : pts) {
    s.samples.push_back({std::move(p), k});
    s.run.push_back(0);
  }
  return s;
}

namespace {

int shadow_length(int k, double eps) {
  return std::max(0, static_cast<int>(std::ceil(k * (1.0 - eps) - 1e-9)));
}

}  // namespace

CoverEstimate shadow_cover_counts(const std::vector<TraceRecord>& traces, double eps, int k_max) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidArgument("eps must lie in [0, 1]");
  CoverEstimate c;
  c.eps = eps;
  std::vector<std::unordered_set<Word, WordHash>> buckets(static_cast<std::size_t>(k_max) + 1);
  for (const auto& t : traces)
    for (const auto& w : t.visited_words) {
      const int k = static_cast<int>(w.size());
      if (k < 1 || k > k_max) continue;
      buckets[static_cast<std::size_t>(k)].insert(prefix(w, static_cast<std::size_t>(shadow_length(k, eps))));
    }
  for (int k = 1; k <= k_max; ++k) {
    c.k.push_back(k);
    c.prefix_length.push_back(shadow_length(k, eps));
    c.N.push_back(buckets[static_cast<std::size_t>(k)].size());
  }
  return c;
}

CoverEstimate full_boundary_cover(const GroupModel& g, double eps, int k_max) {
  CoverEstimate c;
  c.eps = eps;
  for (int k = 1; k <= k_max; ++k) {
    c.k.push_back(k);
    c.prefix_length.push_back(shadow_length(k, eps));
    c.N.push_back(g.sphere_size(shadow_length(k, eps)));
  }
  return c;
}

std::string to_string(DimensionMethod m) {
  switch (m) {
    case DimensionMethod::box: return "box";
    case DimensionMethod::correlation: return "correlation";
    case DimensionMethod::energy: return "energy";
  }
  return "?";
}

DimensionEstimate box_dimension(const CoverEstimate& cover, double a, int k_lo, int k_hi) {
  if (!(a > 1.0)) throw InvalidArgument("visual parameter a must exceed 1");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < cover.k.size(); ++i) {
    if (cover.k[i] < k_lo || cover.k[i] > k_hi) continue;
    if (cover.N[i] == 0) throw InvalidArgument(fmt::format("degenerate window: N_{} = 0", cover.k[i]));
    x.push_back(cover.prefix_length[i] * std::log(a));
    y.push_back(std::log(static_cast<double>(cover.N[i])));
  }
  if (x.size() < 10) throw InvalidArgument(fmt::format("degenerate window: {} scales, need 10", x.size()));
  if (x.front() == x.back()) throw InvalidArgument("degenerate window: shadow prefixes do not grow");
  const auto f = fit_line(x, y);
  DimensionEstimate d;
  d.method = DimensionMethod::box;
  d.value = std::max(0.0, f.slope);
  d.stderr_ = f.slope_se;
  d.residual = f.rms;
  d.lo = k_lo;
  d.hi = k_hi;
  return d;
}

std::vector<double> pair_correlation(const BoundarySampleSet& s, std::uint64_t* pairs_out) {
  const int k = s.prefix_length;
  std::vector<std::uint64_t> at_least(static_cast<std::size_t>(k) + 1, 0);
  // Samples of one run are contiguous and sorted; lcp of neighbours decides
  // the groups sharing each prefix length.
  std::size_t i = 0;
  while (i < s.samples.size()) {
    std::size_t j = i;
    while (j < s.samples.size() && s.run[j] == s.run[i]) ++j;
    std::vector<int> lcp;
    for (std::size_t q = i + 1; q < j; ++q)
      lcp.push_back(static_cast<int>(common_prefix_length(s.samples[q - 1].prefix, s.samples[q].prefix)));
    for (int l = 0; l <= k; ++l) {
      std::uint64_t group = 1;
      for (int v : lcp) {
        if (v >= l) {
          ++group;
        } else {
          at_least[static_cast<std::size_t>(l)] += group * (group - 1) / 2;
          group = 1;
        }
      }
      at_least[static_cast<std::size_t>(l)] += group * (group - 1) / 2;
    }
    i = j;
  }
  if (pairs_out) *pairs_out = at_least[0];
  std::vector<double> C;
  for (auto v : at_least) C.push_back(at_least[0] ? static_cast<double>(v) / static_cast<double>(at_least[0]) : 0.0);
  return C;
}

namespace {

bool at_most_one_per_run(const BoundarySampleSet& s) {
  for (std::size_t i = 1; i < s.run.size(); ++i)
    if (s.run[i] == s.run[i - 1]) return false;
  return true;
}

}  // namespace

DimensionEstimate correlation_dimension(const BoundarySampleSet& s, int l_lo, int l_hi) {
  DimensionEstimate d;
  d.method = DimensionMethod::correlation;
  d.lo = l_lo;
  d.hi = l_hi;
  if (!s.samples.empty() && at_most_one_per_run(s)) return d;
  if (l_lo < 0 || l_hi > s.prefix_length || l_hi - l_lo < 2) throw InvalidArgument("bad correlation window");
  std::uint64_t pairs = 0;
  const auto C = pair_correlation(s, &pairs);
  if (pairs < 1000) throw InvalidArgument(fmt::format("insufficient pairs: {} < 1000", pairs));
  std::vector<double> x, y;
  for (int l = l_lo; l <= l_hi; ++l) {
    if (!(C[static_cast<std::size_t>(l)] > 0.0)) continue;
    x.push_back(l * std::log(s.a));
    y.push_back(-std::log(C[static_cast<std::size_t>(l)]));
  }
  if (x.size() < 3) throw InvalidArgument("correlation window holds fewer than 3 nonempty scales");
  const auto f = fit_line(x, y);
  d.value = std::max(0.0, f.slope);
  d.stderr_ = f.slope_se;
  d.residual = f.rms;
  return d;
}

DimensionEstimate energy_threshold_dimension(const BoundarySampleSet& s, const std::vector<double>& h_grid) {
  DimensionEstimate d;
  d.method = DimensionMethod::energy;
  d.hi = s.prefix_length;
  d.lo = s.prefix_length / 2;
  if (!s.samples.empty() && at_most_one_per_run(s)) return d;
  std::uint64_t pairs = 0;
  const auto C = pair_correlation(s, &pairs);
  if (pairs < 1000) throw InvalidArgument(fmt::format("insufficient pairs: {} < 1000", pairs));
  const int k = s.prefix_length;
  auto energy = [&](double h, int cap) {
    double e = 0.0;
    for (int l = 0; l <= k; ++l) {
      const double exact = C[static_cast<std::size_t>(l)] - (l < k ? C[static_cast<std::size_t>(l) + 1] : 0.0);
      e += exact * std::pow(s.a, h * std::min(l, cap));
    }
    return e;
  };
  std::vector<double> grid = h_grid;
  std::sort(grid.begin(), grid.end());
  for (double h : grid) {
    if (std::abs(energy(h, k) / energy(h, k / 2) - 1.0) >= 0.2) break;
    d.value = h;
  }
  if (grid.size() > 1) d.stderr_ = grid[1] - grid[0];
  return d;
}

int generations_for(const DimensionConfig& cfg, double lambda) {
  if (lambda <= 1.0) return cfg.max_generation;
  return std::min(cfg.max_generation, static_cast<int>(std::ceil(std::log(cfg.final_population) / std::log(lambda))));
}

std::vector<DimensionRow> dimension_report(const DimensionConfig& cfg, const SpectralRadiusEstimate& rho,
                                           std::vector<CoverEstimate>* covers) {
  std::vector<DimensionRow> rows;
  for (double lambda : cfg.lambdas) {
    check_weight(lambda, rho);
    DimensionRow row;
    row.lambda = lambda;
    row.H = pressure_growth(cfg.mu, lambda, rho);
    row.h_target = std::log(row.H) / std::log(cfg.a);
    row.replicas = cfg.replicas;
    row.generations = generations_for(cfg, lambda);
    row.conjectural = lambda >= 1.0 / rho.inflated();

    BRWConfig brw{.mu = cfg.mu,
                  .nu = lambda == 1.0 ? OffspringDistribution::deterministic_one()
                                      : OffspringDistribution::parse(cfg.offspring, lambda),
                  .max_generation = row.generations,
                  .population_budget = cfg.population_budget,
                  .seed = cfg.seed,
                  .record_depth = 0};
    const int n_s = static_cast<int>(std::floor(cfg.settle_fraction * row.generations));
    auto runs = run_replicas(brw, {.replicas = cfg.replicas, .threads = cfg.threads, .keep_radius = std::max(n_s, 1)});
    std::erase_if(runs, [&](const TraceRecord& t) {
      row.truncated += t.truncated ? 1 : 0;
      return t.truncated;
    });
    if (runs.empty()) throw BudgetExceeded(fmt::format("every run at lambda = {} hit the population budget", lambda));

    auto cover = shadow_cover_counts(runs, cfg.eps, n_s);
    row.box = box_dimension(cover, cfg.a, (n_s + 1) / 2, n_s);
    if (covers) covers->push_back(std::move(cover));

    row.prefix_length = default_prefix_length(runs);
    const auto samples = sample_boundary(runs, row.prefix_length, cfg.a);
    row.corr = correlation_dimension(samples, row.prefix_length / 3, 2 * row.prefix_length / 3);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hypbrw
