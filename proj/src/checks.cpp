#include "hypbrw/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "hypbrw/brw.hpp"
#include "hypbrw/commands.hpp"
#include "hypbrw/errors.hpp"
#include "hypbrw/limit_set.hpp"
#include "hypbrw/spectral.hpp"

namespace hypbrw {

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!ok) {
      passed = false;
      detail += " [x]";
    }
  }
};

struct Context {
  const CheckOptions& opt;
  double tol(double t) const { return t * opt.tolerance_scale; }
};

const GroupModel& f2() {
  static const GroupModel g = GroupModel::free_group(2);
  return g;
}

const SpectralRadiusEstimate& rho_of(const StepDistribution& mu) {
  // Every check works with one of three laws; keep their estimates around.
  static std::vector<std::pair<std::string, SpectralRadiusEstimate>> cache;
  const auto key = mu.group().describe() + "/" + mu.describe();
  for (const auto& [k, v] : cache)
    if (k == key) return v;
  cache.emplace_back(key, spectral_radius(mu));
  return cache.back().second;
}

double r_crit(const StepDistribution& mu) { return 1.0 / rho_of(mu).inflated(); }

std::vector<double> linear_grid(double lo, double hi, int points) {
  std::vector<double> r;
  for (int i = 0; i < points; ++i) r.push_back(lo + (hi - lo) * i / (points - 1));
  return r;
}

// Equal spacing of at most `step` from lo to hi inclusive.
std::vector<double> spaced_grid(double lo, double hi, double step) {
  return linear_grid(lo, hi, static_cast<int>(std::ceil((hi - lo) / step)) + 1);
}

Outcome spectral_radius_check(const Context& c) {
  Outcome o;
  const auto mu = StepDistribution::simple(f2());
  const auto rho = spectral_radius(mu);
  const double closed = 2.0 * std::sqrt(3.0) / 4.0;
  o.require(std::abs(rho.rho_hat - 0.866025) <= c.tol(1e-3), fmt::format("rho_hat {:.10f}", rho.rho_hat));
  o.require(std::abs(rho.rho_hat - closed) <= c.tol(1e-3), fmt::format("closed form diff {:.2e}", rho.rho_hat - closed));
  o.require(rho.converged, fmt::format("residual {:.1e}", rho.residual));
  return o;
}

Outcome growth_bounds_check(const Context& c) {
  Outcome o;
  const auto mu = StepDistribution::simple(f2());
  const auto& rho = rho_of(mu);
  const double rc = r_crit(mu);
  const double cap = std::exp(f2().entropy() / 2.0);
  for (double r : {1.0, rc}) {
    const double want = r == 1.0 ? 1.0 : 1.73205;
    const double w = r == 1.0 ? 1e-6 : 1e-3;
    const double hp = pressure_growth(mu, r, rho);
    const double hs = sphere_green_series(mu, r, 200, rho).H_estimate;
    o.require(std::abs(hp - want) <= c.tol(w) && std::abs(hs - want) <= c.tol(w),
              fmt::format("H({:.6f}) pressure {:.8f} series {:.8f}", r, hp, hs));
  }
  double worst = -INFINITY;
  for (double r : linear_grid(1.0, rc, 20)) worst = std::max(worst, pressure_growth(mu, r, rho) - cap);
  o.require(worst <= c.tol(1e-6), fmt::format("max H - e^(v/2) on 20 points {:.2e}", worst));
  return o;
}

Outcome exponential_growth_check(const Context& c) {
  Outcome o;
  const auto mu = StepDistribution::simple(f2());
  const auto& rho = rho_of(mu);
  double band = 0.0, drift = 0.0;
  for (double r : {1.0, 1.05, 1.1, r_crit(mu)}) {
    const auto s = sphere_green_series(mu, r, 210, rho);
    const double log_H = std::log(pressure_growth(mu, r, rho));
    double lo = INFINITY, hi = -INFINITY;
    for (int n = 5; n <= 200; ++n) {
      const double v = s.log_H[static_cast<std::size_t>(n)] - n * log_H;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    band = std::max(band, std::exp(std::max(hi, -lo)));
    const auto a = multiplicativity_constants(s, 200);
    const auto b = multiplicativity_constants(s, 210);
    for (auto [x, y] : {std::pair{a.sub_const, b.sub_const}, {a.super_const, b.super_const},
                        {a.sub_interior, b.sub_interior}, {a.super_interior, b.super_interior}}) {
      if (!std::isfinite(x) || !std::isfinite(y) || x <= 0.0) drift = INFINITY;
      else drift = std::max(drift, std::abs(y / x - 1.0));
    }
  }
  o.require(band < 10.0 * c.opt.tolerance_scale, fmt::format("band C {:.6f}", band));
  o.require(drift <= c.tol(0.01), fmt::format("constants drift N 200->210 {:.2e}", drift));
  return o;
}

Outcome monotonicity_check(const Context&) {
  Outcome o;
  const auto mu = StepDistribution::simple(f2());
  const auto& rho = rho_of(mu);
  const double rc = r_crit(mu);
  std::vector<double> jumps;
  for (double step : {0.01, 0.005}) {
    const auto grid = spaced_grid(1.0, rc, step);
    double min_inc = INFINITY, max_jump = 0.0, prev = NAN;
    for (double r : grid) {
      const double h = pressure_growth(mu, r, rho);
      if (!std::isnan(prev)) {
        min_inc = std::min(min_inc, h - prev);
        max_jump = std::max(max_jump, h - prev);
      }
      prev = h;
    }
    o.require(min_inc > 0.0, fmt::format("spacing {} min increment {:.3e}", step, min_inc));
    jumps.push_back(max_jump);
  }
  o.require(jumps[1] < jumps[0], fmt::format("max jump {:.4e} -> {:.4e}", jumps[0], jumps[1]));
  return o;
}

Outcome derivative_check(const Context& c) {
  Outcome o;
  const auto mu = StepDistribution::simple(f2());
  for (double r : {1.0, 1.05}) {
    const auto d = green_derivative_check(mu, r, 1e-3, rho_of(mu));
    const double worst = std::max({d.rel_error, d.rel_error_h2, d.rel_error_richardson});
    o.require(worst < c.tol(1e-4), fmt::format("r {} rel err h {:.1e} h/2 {:.1e} richardson {:.1e}", r, d.rel_error,
                                               d.rel_error_h2, d.rel_error_richardson));
  }
  return o;
}

std::vector<double> exponent_grid(const StepDistribution& mu) { return dyadic_grid(r_crit(mu), 6, 14, 1); }

Outcome eta_check(const Context& c) {
  Outcome o;
  const auto mu = StepDistribution::simple(f2());
  const auto f = eta_exponent_fit(mu, rho_of(mu), exponent_grid(mu));
  o.require(std::abs(f.slope + 0.5) <= c.tol(0.05), fmt::format("slope {:.4f} C2 {:.4f}", f.slope, f.C_hat));
  return o;
}

Outcome critical_exponent_check(const Context& c) {
  Outcome o;
  const auto z4 = GroupModel::free_product_z2(4);
  const std::pair<const char*, StepDistribution> laws[] = {{"F2 srw", StepDistribution::simple(f2())},
                                                           {"Z2^*4 srw", StepDistribution::simple(z4)},
                                                           {"F2 lazy 1/2", StepDistribution::lazy(f2(), 0.5)}};
  for (const auto& [name, mu] : laws) {
    const auto f = critical_exponent_fit(mu, rho_of(mu), exponent_grid(mu));
    o.require(std::abs(f.slope - 0.5) <= c.tol(0.05), fmt::format("{} slope {:.4f}", name, f.slope));
  }
  return o;
}

BRWConfig moment_config(const CheckOptions& opt, int record_depth) {
  return BRWConfig{.mu = StepDistribution::simple(f2()),
                   .nu = OffspringDistribution::two_point(2, 1.05),
                   .max_generation = 100,
                   .seed = opt.seed,
                   .record_depth = record_depth,
                   .prune_far = true};
}

Outcome many_to_one_check(const Context& c) {
  Outcome o;
  const auto cfg = moment_config(c.opt, 4);
  const auto rep = empirical_moments(cfg, 100'000, -1, c.opt.threads);
  const auto table = GreenTable::radial(cfg.mu, 1.05, 6);
  double worst = 0.0;
  std::string where;
  for (std::size_t i = 0; i < rep.words.size(); ++i) {
    const double z = std::abs(rep.first[i].mean - table.value(rep.words[i])) / rep.first[i].se;
    if (z > worst) {
      worst = z;
      where = to_tokens(f2(), rep.words[i]);
    }
  }
  const double tail = generation_tail(cfg.mu, 1.05, Word{}, cfg.max_generation);
  o.require(worst <= 3.0 * c.opt.tolerance_scale,
            fmt::format("{} points max |z| {:.3f} at {}", rep.words.size(), worst, where));
  o.require(rep.truncated_runs == 0, fmt::format("truncated runs {}", rep.truncated_runs));
  o.detail += fmt::format("; tail at e {:.1e}", tail);
  return o;
}

Outcome second_moment_check(const Context& c) {
  Outcome o;
  const auto cfg = moment_config(c.opt, 3);
  const auto rep = empirical_moments(cfg, 100'000, 3, c.opt.threads);
  const auto g = RadialGreen(cfg.mu, 1.05, 8);
  const double sigma2 = cfg.nu.second_moment();
  double slack = INFINITY, ratio = 0.0;
  for (std::size_t p = 0; p < rep.pairs.size(); ++p) {
    const auto& x = rep.words[static_cast<std::size_t>(rep.pairs[p].first)];
    const auto& y = rep.words[static_cast<std::size_t>(rep.pairs[p].second)];
    const double bound = sigma2 * triple_green_sum(g, f2(), x, y);
    const auto& m = rep.second[p];
    slack = std::min(slack, bound + 3.0 * c.opt.tolerance_scale * m.se - m.mean);
    ratio = std::max(ratio, m.mean / bound);
  }
  o.require(slack >= 0.0, fmt::format("{} pairs min slack {:.4f} max mean/bound {:.3f}", rep.pairs.size(), slack, ratio));
  o.require(rep.truncated_runs == 0, fmt::format("truncated runs {}", rep.truncated_runs));
  return o;
}

Outcome trace_growth_check(const Context& c) {
  Outcome o;
  const auto mu = StepDistribution::simple(f2());
  for (double lambda : {1.1, 1.0}) {
    const BRWConfig cfg{.mu = mu,
                        .nu = OffspringDistribution::two_point(2, lambda),
                        .max_generation = 120,
                        .seed = c.opt.seed,
                        .record_depth = 0};
    const auto runs = run_replicas(cfg, {.replicas = 20, .threads = c.opt.threads});
    const int n_s = settled_radius(runs.front(), 0.2);
    const auto g = growth_rate(runs, (n_s + 1) / 2, n_s);
    const double H = pressure_growth(mu, lambda, rho_of(mu));
    const double rel = std::abs(g.H_pooled / H - 1.0);
    const double w = lambda > 1.0 ? 0.05 : 0.02;
    o.require(rel <= c.tol(w) && g.runs_used > 0,
              fmt::format("lambda {} pooled {:.4f} vs H {:.4f} (median {:.4f})", lambda, g.H_pooled, H, g.H_median));
  }
  return o;
}

Outcome dimension_check(const Context& c) {
  Outcome o;
  const auto mu = StepDistribution::simple(f2());
  const DimensionConfig cfg{.mu = mu, .lambdas = {1.05, 1.1}, .seed = c.opt.seed, .threads = c.opt.threads};
  for (const auto& row : dimension_report(cfg, rho_of(mu))) {
    const double eb = row.box.value / row.h_target - 1.0, ec = row.corr.value / row.h_target - 1.0;
    o.require(std::abs(eb) <= c.tol(0.1) && std::abs(ec) <= c.tol(0.1) && !row.conjectural,
              fmt::format("lambda {} target {:.4f} box {:.4f} corr {:.4f}", row.lambda, row.h_target, row.box.value,
                          row.corr.value));
  }
  const double v = f2().entropy();
  const auto box = box_dimension(full_boundary_cover(f2(), 0.1, 12), std::exp(1.0), 2, 12);
  const auto uni = uniform_boundary_samples(f2(), 4000, 12, std::exp(1.0), c.opt.seed);
  const auto corr = correlation_dimension(uni, 2, 8);
  o.require(std::abs(box.value / v - 1.0) <= c.tol(0.02) && std::abs(corr.value / v - 1.0) <= c.tol(0.02),
            fmt::format("full boundary box {:.4f} corr {:.4f} vs log 3", box.value, corr.value));
  return o;
}

Outcome pressure_check(const Context& c) {
  Outcome o;
  const Automaton a = build_automaton(f2());
  const auto compare = [&](const StepDistribution& mu, int h, double width, const char* name) {
    const auto& rho = rho_of(mu);
    double worst = 0.0;
    for (double r : linear_grid(1.0, r_crit(mu), 10)) {
      const auto table = GreenTable::make(mu, r, h + 1, rho);
      const double hp = pressure(build_potential(table, h), a).H;
      const double hs = sphere_green_series(mu, r, 200, rho).H_estimate;
      worst = std::max(worst, std::abs(hp / hs - 1.0));
    }
    o.require(worst <= c.tol(width), fmt::format("{} h {} max rel diff {:.2e}", name, h, worst));
  };
  compare(StepDistribution::simple(f2()), 0, 1e-3, "srw");
  compare(StepDistribution::lazy(f2(), 0.5), 2, 0.01, "lazy");
  const auto mu = StepDistribution::simple(f2());
  double worst = 0.0;
  for (double r : {1.0, 1.1, r_crit(mu)}) {
    const auto table = GreenTable::radial(mu, r, 42);
    const auto phi = build_potential(table, 0);
    for (int n = 1; n <= 40; ++n) worst = std::max(worst, verify_Hnr_identity(table, phi, a, n));
  }
  o.require(worst < c.tol(1e-10), fmt::format("Hnr identity max rel err {:.1e}", worst));
  return o;
}

ExperimentConfig replay_config(const CheckOptions& opt) {
  ExperimentConfig cfg;
  cfg.seed = opt.seed;
  cfg.green.r = {1.0, 1.1};
  cfg.green.N = 60;
  cfg.brw.replicas = 6;
  cfg.brw.max_generation = 80;
  cfg.brw.moment_replicas = 3000;
  cfg.brw.moment_generations = 40;
  cfg.brw.record_depth = 3;
  cfg.brw.pair_depth = 2;
  cfg.dimension.lambda = {1.1};
  cfg.dimension.replicas = 6;
  cfg.dimension.final_population = 2e4;
  return cfg;
}

Outcome determinism_check(const Context& c) {
  Outcome o;
  if (c.opt.scratch.empty()) throw InvalidArgument("determinism check needs a scratch directory");
  auto cfg = replay_config(c.opt);
  for (const char* name : {"brw", "dimension", "green", "pressure", "exponent"}) {
    std::vector<std::map<std::string, std::string>> digests;
    for (int threads : {1, 1, 2}) {
      cfg.threads = threads;
      const auto dir = c.opt.scratch / fmt::format("{}_{}", name, digests.size());
      std::ostringstream log, err;
      const int code = run_command(name, cfg, dir, log, err);
      // Small replica counts may miss the dimension tolerance; only the bytes matter here.
      if (code != exit_ok && code != exit_verify) throw Error(fmt::format("{} exited with {}: {}", name, code, err.str()));
      const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
      digests.push_back(manifest["digests"].get<std::map<std::string, std::string>>());
    }
    const bool same = !digests[0].empty() && digests[0] == digests[1] && digests[0] == digests[2];
    o.require(same, fmt::format("{} {} files", name, digests[0].size()));
  }
  std::filesystem::remove_all(c.opt.scratch);
  return o;
}

struct Entry {
  CheckInfo info;
  std::function<Outcome(const Context&)> run;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = {
      {{1, "spectral radius", "rho = lim p_2n(e,e)^(1/2n) = 2 sqrt(d-1)/d on the free group", 5, true},
       spectral_radius_check},
      {{2, "growth rate bounds", "H(1) = 1 and H(r) <= e^(v/2) with equality at the critical weight", 30, true},
       growth_bounds_check},
      {{3, "purely exponential growth", "H_n(r) / H(r)^n bounded above and below; sub/super-multiplicativity", 60,
        true},
       exponential_growth_check},
      {{4, "monotone continuity", "H(r) continuous and strictly increasing on [1; 1/rho]", 60, true},
       monotonicity_check},
      {{5, "derivative identity", "d/dr (r G_r(e,e)) = sum_y G_r(e,y) G_r(y,e)", 60, true}, derivative_check},
      {{6, "eta asymptotics", "eta(r) ~ C (1/rho - r)^(-1/2)", 120, true}, eta_check},
      {{7, "critical exponent", "H(1/rho) - H(r) ~ C (1/rho - r)^(1/2) for three walks", 120, true},
       critical_exponent_check},
      {{8, "many-to-one", "E[Z_x] = G_lambda(e;x)", 300, false}, many_to_one_check},
      {{9, "second moment bound", "E[Z_x Z_y] <= sigma^2 sum_z G(e;z) G(z;x) G(z;y)", 300, false},
       second_moment_check},
      {{10, "trace growth", "|P intersect S_n| grows like H(lambda)^n", 300, false}, trace_growth_check},
      {{11, "limit set dimension", "dim of the limit set = log_a H(lambda); full boundary = log_a(2q-1)", 600, false},
       dimension_check},
      {{12, "pressure identity", "H_n(r) = G_r(e;e) (L_r^n 1)(root); log H = pressure", 60, true}, pressure_check},
      {{13, "determinism", "replays with one seed give identical CSV digests", 120, false}, determinism_check},
  };
  return e;
}

}  // namespace

const std::vector<CheckInfo>& check_catalog() {
  static const std::vector<CheckInfo> c = [] {
    std::vector<CheckInfo> v;
    for (const auto& e : entries()) v.push_back(e.info);
    return v;
  }();
  return c;
}

CheckResult run_check(int id, const CheckOptions& opt) {
  const auto& all = entries();
  const auto it = std::find_if(all.begin(), all.end(), [&](const Entry& e) { return e.info.id == id; });
  if (it == all.end()) throw InvalidArgument(fmt::format("unknown check id {}", id));
  CheckResult r;
  r.id = id;
  r.name = it->info.name;
  r.anchor = it->info.anchor;
  r.time_limit = it->info.time_limit;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto o = it->run(Context{opt});
    r.passed = o.passed;
    r.detail = o.detail;
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = fmt::format("error: {}", e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.seconds > r.time_limit) {
    r.passed = false;
    r.detail += fmt::format("; over time budget");
  }
  return r;
}

std::string format_check(const CheckResult& r) {
  return fmt::format("[{}] {:02d} {:<28} ({:.1f} s / {:.0f} s) {}", r.passed ? "PASS" : "FAIL", r.id, r.name,
                     r.seconds, r.time_limit, r.detail);
}

}  // namespace hypbrw
