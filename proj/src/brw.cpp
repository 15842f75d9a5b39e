#include "hypbrw/brw.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"
#include "hypbrw/heat_kernel.hpp"
#include "hypbrw/rng.hpp"

namespace hypbrw {

OffspringDistribution::OffspringDistribution(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  if (pmf_.size() < 2) throw InvalidArgument("offspring law needs support in {1, 2, ...}");
  if (pmf_[0] != 0.0) throw InvalidArgument("offspring law must have nu(0) = 0");
  double total = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    if (!(pmf_[k] >= 0.0)) throw InvalidArgument(fmt::format("nu({}) is negative", k));
    total += pmf_[k];
    cdf_.push_back(total);
    mean_ += static_cast<double>(k) * pmf_[k];
    second_ += static_cast<double>(k * k) * pmf_[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument(fmt::format("offspring law sums to {}", total));
  while (pmf_.size() > 2 && pmf_.back() == 0.0) {
    pmf_.pop_back();
    cdf_.pop_back();
  }
}

OffspringDistribution OffspringDistribution::from_pmf(std::vector<double> pmf) {
  return OffspringDistribution(std::move(pmf));
}

OffspringDistribution OffspringDistribution::deterministic_one() { return OffspringDistribution({0.0, 1.0}); }

OffspringDistribution OffspringDistribution::two_point(int k, double lambda) {
  if (k < 2) throw InvalidArgument("two_point offspring law needs k >= 2");
  if (!(lambda >= 1.0 && lambda <= k)) throw InvalidArgument(fmt::format("mean {} not in [1, {}]", lambda, k));
  std::vector<double> pmf(static_cast<std::size_t>(k) + 1, 0.0);
  pmf[static_cast<std::size_t>(k)] = (lambda - 1.0) / (k - 1);
  pmf[1] = 1.0 - pmf[static_cast<std::size_t>(k)];
  return OffspringDistribution(std::move(pmf));
}

OffspringDistribution OffspringDistribution::parse(const std::string& spec, double lambda) {
  OffspringDistribution nu = [&] {
    try {
      if (spec == "one") return deterministic_one();
      if (spec.rfind("two_point:", 0) == 0) return two_point(std::stoi(spec.substr(10)), lambda);
      if (spec.rfind("pmf:", 0) == 0) {
        std::vector<double> pmf{0.0};
        std::stringstream ss(spec.substr(4));
        std::string item;
        while (std::getline(ss, item, ',')) pmf.push_back(std::stod(item));
        return from_pmf(std::move(pmf));
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument(fmt::format("malformed offspring law '{}'", spec));
    }
    throw InvalidArgument(fmt::format("unknown offspring law '{}'", spec));
  }();
  if (std::abs(nu.mean() - lambda) > 1e-9)
    throw InvalidArgument(fmt::format("offspring law '{}' has mean {}, not lambda = {}", spec, nu.mean(), lambda));
  return nu;
}

int OffspringDistribution::sample(double u) const {
  for (std::size_t k = 1; k < cdf_.size(); ++k)
    if (u < cdf_[k]) return static_cast<int>(k);
  return k_max();
}

std::string OffspringDistribution::describe() const {
  std::string out = "pmf:";
  for (std::size_t k = 1; k < pmf_.size(); ++k) out += fmt::format("{}{}", k > 1 ? "," : "", pmf_[k]);
  return out;
}

void validate_config(const BRWConfig& cfg, const SpectralRadiusEstimate& rho) {
  if (cfg.max_generation < 1) throw InvalidArgument("max_generation must be >= 1");
  if (cfg.population_budget < 1) throw InvalidArgument("population_budget must be >= 1");
  if (cfg.record_depth < 0 || cfg.record_depth > 8) throw InvalidArgument("record_depth must lie in [0, 8]");
  if (cfg.watch_radius < 0) throw InvalidArgument("watch_radius must be >= 0");
  if (!(cfg.jump_eps > 0.0)) throw InvalidArgument("jump_eps must be positive");
  check_weight(cfg.nu.mean(), rho);
}

namespace {

class AtomSampler {
 public:
  explicit AtomSampler(const StepDistribution& mu) : mu_(mu) {
    double c = 0.0;
    for (const auto& a : mu.atoms()) cdf_.push_back(c += a.prob);
  }
  const Word& pick(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    return mu_.atoms()[i].word;
  }

 private:
  const StepDistribution& mu_;
  std::vector<double> cdf_;
};

bool advance(const GenerationState& s, const BRWConfig& cfg, std::uint64_t replica, WordTable& table,
             const AtomSampler& atoms, std::uint64_t limit, GenerationState& out, GenerationStats& st) {
  out.m = s.m + 1;
  out.particles.clear();
  st = GenerationStats{};
  st.min_speed = std::numeric_limits<double>::infinity();
  const double m1 = out.m;
  for (std::size_t i = 0; i < s.particles.size(); ++i) {
    CounterRng rng{cfg.seed, replica, static_cast<std::uint64_t>(s.m), i};
    const int k = cfg.nu.sample(rng.uniform());
    if (st.children + static_cast<std::uint64_t>(k) > limit) return false;
    const WordId parent = s.particles[i];
    const double pd = table.depth(parent);
    for (int c = 0; c < k; ++c) {
      const Word& w = atoms.pick(rng.uniform());
      const WordId child = table.step(parent, w);
      out.particles.push_back(child);
      if (static_cast<double>(w.size()) > cfg.jump_eps * pd) ++st.big_jumps;
      const double speed = table.depth(child) / m1;
      st.min_speed = std::min(st.min_speed, speed);
      st.max_speed = std::max(st.max_speed, speed);
    }
    st.children += static_cast<std::uint64_t>(k);
  }
  if (out.particles.empty()) st.min_speed = 0.0;
  return true;
}

}  // namespace

GenerationState step_generation(const GenerationState& state, const BRWConfig& cfg, std::uint64_t replica,
                                WordTable& table, GenerationStats* stats) {
  GenerationState out;
  GenerationStats st;
  advance(state, cfg, replica, table, AtomSampler(cfg.mu), std::numeric_limits<std::uint64_t>::max(), out, st);
  if (stats) *stats = st;
  return out;
}

TraceRecord run(const BRWConfig& cfg, std::uint64_t replica, WordTable& table, int keep_radius) {
  if (!(table.group() == cfg.mu.group())) throw InvalidArgument("word table belongs to another group");
  table.clear();
  table.fill_ball(cfg.record_depth);
  const auto ball = static_cast<WordId>(table.size());
  const AtomSampler atoms(cfg.mu);
  const int reach = std::max(1, cfg.mu.max_step());

  TraceRecord t;
  t.replica = replica;
  t.jump_eps = cfg.jump_eps;
  t.pruned = cfg.prune_far;
  t.Z.assign(static_cast<std::size_t>(ball), 0);
  std::vector<char> seen(table.size(), 0);

  auto visit = [&](WordId id, int m) {
    if (id < ball) ++t.Z[static_cast<std::size_t>(id)];
    const int d = table.depth(id);
    if (d <= cfg.watch_radius) t.last_watch_visit = m;
    const auto i = static_cast<std::size_t>(id);
    if (i >= seen.size()) seen.resize(std::max(table.size(), 2 * seen.size()), 0);
    if (seen[i]) return;
    seen[i] = 1;
    if (t.M.size() <= static_cast<std::size_t>(d)) t.M.resize(static_cast<std::size_t>(d) + 1, 0);
    ++t.M[static_cast<std::size_t>(d)];
    if (d <= keep_radius) t.visited_words.push_back(table.word(id));
  };

  GenerationState cur{0, {WordTable::identity()}}, next;
  visit(WordTable::identity(), 0);
  t.population.push_back(1);
  t.min_speed.push_back(0.0);
  t.max_speed.push_back(0.0);
  t.big_jumps.push_back(0);

  for (int m = 0; m < cfg.max_generation && !cur.particles.empty(); ++m) {
    GenerationStats st;
    if (!advance(cur, cfg, replica, table, atoms, cfg.population_budget - t.particle_steps, next, st)) {
      t.truncated = true;
      break;
    }
    t.particle_steps += st.children;
    for (WordId id : next.particles) visit(id, m + 1);
    t.population.push_back(next.particles.size());
    t.min_speed.push_back(st.min_speed);
    t.max_speed.push_back(st.max_speed);
    t.big_jumps.push_back(st.big_jumps);
    t.generations = m + 1;
    if (cfg.prune_far) {
      const int left = cfg.max_generation - (m + 1);
      std::erase_if(next.particles,
                    [&](WordId id) { return table.depth(id) - reach * left > cfg.record_depth; });
    }
    std::swap(cur, next);
  }
  if (keep_radius > 0)
    for (WordId id : cur.particles) t.final_particles.push_back(table.word(id));
  return t;
}

TraceRecord run(const BRWConfig& cfg, std::uint64_t replica, int keep_radius) {
  WordTable table(cfg.mu.group());
  return run(cfg, replica, table, keep_radius);
}

int settled_radius(const TraceRecord& t, double fraction) {
  return static_cast<int>(std::floor(fraction * t.generations));
}

GrowthEstimate growth_rate(const std::vector<TraceRecord>& runs, int n_lo, int n_hi) {
  if (n_lo < 0 || n_hi - n_lo + 1 < 5) throw InvalidArgument("growth fit needs at least 5 radii");
  GrowthEstimate g;
  g.n_lo = n_lo;
  g.n_hi = n_hi;
  const auto width = static_cast<std::size_t>(n_hi - n_lo + 1);
  std::vector<CompensatedSum> sums(width);
  std::vector<double> per_run;
  std::vector<double> xs;
  for (int n = n_lo; n <= n_hi; ++n) xs.push_back(n);
  for (const auto& t : runs) {
    if (t.truncated) {
      ++g.runs_truncated;
      continue;
    }
    if (t.generations < 20) throw InvalidArgument("growth fit needs traces with at least 20 generations");
    ++g.runs_used;
    bool positive = true;
    std::vector<double> ys;
    for (int n = n_lo; n <= n_hi; ++n) {
      const double M = static_cast<std::size_t>(n) < t.M.size() ? static_cast<double>(t.M[static_cast<std::size_t>(n)]) : 0.0;
      sums[static_cast<std::size_t>(n - n_lo)] += M;
      positive = positive && M > 0.0;
      ys.push_back(positive ? std::log(M) : 0.0);
    }
    if (positive) per_run.push_back(std::exp(fit_line(xs, ys).slope));
  }
  if (g.runs_used == 0) throw InvalidArgument("growth fit: every run was truncated");
  std::vector<double> ys;
  for (auto& s : sums) {
    const double mean = s.value() / g.runs_used;
    if (!(mean > 0.0)) throw InvalidArgument("growth fit: M_n vanishes inside the window");
    g.mean_M.push_back(mean);
    ys.push_back(std::log(mean));
  }
  const auto f = fit_line(xs, ys);
  g.H_pooled = std::exp(f.slope);
  g.se_pooled = g.H_pooled * f.slope_se;
  g.H_median = per_run.empty() ? NAN : median(per_run);
  return g;
}

GrowthEstimate growth_rate(const TraceRecord& t, double fraction) {
  const int n_s = settled_radius(t, fraction);
  return growth_rate(std::vector<TraceRecord>{t}, (n_s + 1) / 2, n_s);
}

std::vector<TraceRecord> run_replicas(const BRWConfig& cfg, const RunSetOptions& opt) {
  if (opt.replicas < 0) throw InvalidArgument("replica count must be nonnegative");
  std::vector<TraceRecord> out(static_cast<std::size_t>(opt.replicas));
  std::atomic<int> next{0};
  auto worker = [&] {
    WordTable table(cfg.mu.group());
    for (int i; (i = next++) < opt.replicas;)
      out[static_cast<std::size_t>(i)] = run(cfg, static_cast<std::uint64_t>(i), table, opt.keep_radius);
  };
  const int threads = std::clamp(opt.threads, 1, std::max(1, opt.replicas));
  std::vector<std::jthread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  return out;
}

namespace {

struct MomentSums {
  std::vector<std::uint64_t> s1, s2, p1, p2;
  int truncated = 0;
};

MeanSe from_sums(std::uint64_t s1, std::uint64_t s2, int n) {
  MeanSe out;
  const long double N = n;
  const long double mean = s1 / N;
  out.mean = static_cast<double>(mean);
  if (n > 1) {
    const long double var = std::max<long double>(0.0L, (s2 - s1 * mean) / (N - 1));
    out.se = static_cast<double>(std::sqrt(var / N));
  }
  return out;
}

}  // namespace

MomentReport empirical_moments(const BRWConfig& cfg, int replicas, int pair_depth, int threads) {
  if (replicas < 2) throw InvalidArgument("moment estimates need at least two replicas");
  if (pair_depth > cfg.record_depth) throw InvalidArgument("pair_depth exceeds record_depth");
  MomentReport rep;
  rep.replicas = replicas;
  rep.words = ball_words(cfg.mu.group(), cfg.record_depth);
  const auto paired = static_cast<int>(cfg.mu.group().ball_size(std::max(pair_depth, 0)));
  if (pair_depth >= 0)
    for (int i = 0; i < paired; ++i)
      for (int j = i; j < paired; ++j) rep.pairs.emplace_back(i, j);

  // Integer accumulators make the totals independent of the thread split.
  const int T = std::clamp(threads, 1, replicas);
  std::vector<MomentSums> partial(static_cast<std::size_t>(T));
  std::atomic<int> next{0};
  auto worker = [&](int slot) {
    auto& acc = partial[static_cast<std::size_t>(slot)];
    acc.s1.assign(rep.words.size(), 0);
    acc.s2.assign(rep.words.size(), 0);
    acc.p1.assign(rep.pairs.size(), 0);
    acc.p2.assign(rep.pairs.size(), 0);
    WordTable table(cfg.mu.group());
    for (int i; (i = next++) < replicas;) {
      const auto t = run(cfg, static_cast<std::uint64_t>(i), table);
      if (t.truncated) ++acc.truncated;
      for (std::size_t x = 0; x < t.Z.size(); ++x) {
        acc.s1[x] += t.Z[x];
        acc.s2[x] += t.Z[x] * t.Z[x];
      }
      for (std::size_t p = 0; p < rep.pairs.size(); ++p) {
        const std::uint64_t v = t.Z[static_cast<std::size_t>(rep.pairs[p].first)] *
                                t.Z[static_cast<std::size_t>(rep.pairs[p].second)];
        acc.p1[p] += v;
        acc.p2[p] += v * v;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int k = 1; k < T; ++k) pool.emplace_back(worker, k);
    worker(0);
  }
  MomentSums total = partial[0];
  for (int k = 1; k < T; ++k) {
    const auto& p = partial[static_cast<std::size_t>(k)];
    for (std::size_t x = 0; x < total.s1.size(); ++x) {
      total.s1[x] += p.s1[x];
      total.s2[x] += p.s2[x];
    }
    for (std::size_t q = 0; q < total.p1.size(); ++q) {
      total.p1[q] += p.p1[q];
      total.p2[q] += p.p2[q];
    }
    total.truncated += p.truncated;
  }
  rep.truncated_runs = total.truncated;
  for (std::size_t x = 0; x < rep.words.size(); ++x) rep.first.push_back(from_sums(total.s1[x], total.s2[x], replicas));
  for (std::size_t q = 0; q < rep.pairs.size(); ++q) rep.second.push_back(from_sums(total.p1[q], total.p2[q], replicas));
  return rep;
}

MeanSe empirical_first_moment(const Word& x, int replicas, const BRWConfig& cfg, int threads) {
  if (static_cast<int>(x.size()) > cfg.record_depth) throw InvalidArgument("|x| exceeds record_depth");
  const auto rep = empirical_moments(cfg, replicas, -1, threads);
  const auto it = std::find(rep.words.begin(), rep.words.end(), x);
  return rep.first[static_cast<std::size_t>(it - rep.words.begin())];
}

MeanSe empirical_second_moment(const Word& x, const Word& y, int replicas, const BRWConfig& cfg, int threads) {
  const int depth = static_cast<int>(std::max(x.size(), y.size()));
  if (depth > cfg.record_depth) throw InvalidArgument("|x| or |y| exceeds record_depth");
  const auto rep = empirical_moments(cfg, replicas, depth, threads);
  auto i = static_cast<int>(std::find(rep.words.begin(), rep.words.end(), x) - rep.words.begin());
  auto j = static_cast<int>(std::find(rep.words.begin(), rep.words.end(), y) - rep.words.begin());
  if (i > j) std::swap(i, j);
  const auto it = std::find(rep.pairs.begin(), rep.pairs.end(), std::pair{i, j});
  return rep.second[static_cast<std::size_t>(it - rep.pairs.begin())];
}

double generation_tail(const StepDistribution& mu, double lambda, const Word& x, int N) {
  if (!mu.is_isotropic()) throw InvalidArgument("generation_tail needs an isotropic step law");
  const auto rho = spectral_radius(mu);
  const double q = lambda * rho.inflated();
  if (!(q < 1.0)) throw RegimeError("generation_tail: lambda rho >= 1");
  const int extra = std::min(20000, static_cast<int>(std::ceil(std::log(1e-17) / std::log(q))) + 1);
  const RadialHeatKernel kernel(mu, N + extra);
  const int k = static_cast<int>(x.size());
  CompensatedSum s;
  for (int n = N + 1; n <= N + extra; ++n) {
    const double lq = kernel.log_q(n, k);
    if (std::isfinite(lq)) s += std::exp(n * std::log(lambda) + lq);
  }
  return s.value();
}

SpeedReport speed_and_jump_report(const TraceRecord& t, int from, int to) {
  if (t.generations < 30) throw InvalidArgument("speed report needs at least 30 generations");
  to = std::min(to, t.generations);
  if (from < 1 || from > to) throw InvalidArgument("bad generation range for the speed report");
  SpeedReport r;
  r.from = from;
  r.to = to;
  r.min_speed = std::numeric_limits<double>::infinity();
  for (int m = from; m <= to; ++m) {
    if (t.population[static_cast<std::size_t>(m)] == 0) continue;
    r.min_speed = std::min(r.min_speed, t.min_speed[static_cast<std::size_t>(m)]);
    r.max_speed = std::max(r.max_speed, t.max_speed[static_cast<std::size_t>(m)]);
  }
  const int after = std::max(10, static_cast<int>(std::ceil(1.0 / t.jump_eps)));
  for (int m = after + 1; m <= t.generations; ++m) r.big_jumps_after += t.big_jumps[static_cast<std::size_t>(m)];
  return r;
}

double speed_lower_bound(const StepDistribution& mu, double lambda, const SpectralRadiusEstimate& rho) {
  return -std::log(lambda * rho.rho_hat) / mu.group().entropy();
}

}  // namespace hypbrw
