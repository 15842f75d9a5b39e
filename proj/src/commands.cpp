#include "hypbrw/commands.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "hypbrw/brw.hpp"
#include "hypbrw/checks.hpp"
#include "hypbrw/errors.hpp"
#include "hypbrw/limit_set.hpp"
#include "hypbrw/spectral.hpp"

#ifndef HYPBRW_VERSION
#define HYPBRW_VERSION "dev"
#endif

namespace hypbrw {

const char* version_string() { return HYPBRW_VERSION; }

namespace {

struct Setup {
  GroupModel group;
  StepDistribution mu;
  SpectralRadiusEstimate rho;
};

Setup setup(const ExperimentConfig& cfg, int rho_depth = 2000) {
  const auto g = GroupModel::parse(cfg.group);
  auto mu = StepDistribution::parse(g, cfg.walk);
  SpectralRadiusOptions opt;
  opt.depth = rho_depth;
  auto rho = spectral_radius(mu, opt);
  return {g, std::move(mu), std::move(rho)};
}

std::vector<double> default_r_grid(const SpectralRadiusEstimate& rho, int points) {
  const double r_c = 1.0 / rho.inflated();
  std::vector<double> r;
  for (int i = 0; i < points; ++i) r.push_back(1.0 + (r_c - 1.0) * i / (points - 1));
  return r;
}

std::string clean(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

CommandOutput cmd_green(const ExperimentConfig& cfg, OutputDir& out) {
  const auto s = setup(cfg, cfg.green.rho_depth);
  CommandOutput res;
  CsvTable rho_csv({"n", "a_n", "extrapolant", "aitken"});
  for (std::size_t m = 1; m < s.rho.a.size(); ++m)
    rho_csv.add_row({cell(static_cast<int>(m)), cell(s.rho.a[m]), cell(s.rho.extrapolant[m]), cell(s.rho.aitken[m])});
  out.write("rho.csv", rho_csv);
  res.results["rho_hat"] = s.rho.rho_hat;
  res.results["rho_residual"] = s.rho.residual;
  res.results["rho_converged"] = s.rho.converged;

  CsvTable series({"r", "n", "H_n", "ratio"});
  CsvTable summary({"r", "H_estimate", "G_ee", "sub_const", "super_const", "sub_interior", "super_interior"});
  auto rows = nlohmann::ordered_json::array();
  for (double r : cfg.green.r) {
    const auto h = sphere_green_series(s.mu, r, cfg.green.N, s.rho);
    for (std::size_t n = 0; n < h.H.size(); ++n) {
      const double ratio = n + 1 < h.H.size() ? std::exp(h.log_H[n + 1] - h.log_H[n]) : NAN;
      series.add_row({cell(r), cell(static_cast<int>(n)), cell(h.H[n]), cell(ratio)});
    }
    summary.add_row({cell(r), cell(h.H_estimate), cell(h.G_ee), cell(h.sub_const), cell(h.super_const),
                     cell(h.sub_const_interior), cell(h.super_const_interior)});
    rows.push_back({{"r", r}, {"H_estimate", h.H_estimate}, {"G_ee", h.G_ee}});
  }
  out.write("green_series.csv", series);
  out.write("green_summary.csv", summary);
  res.results["H"] = rows;
  return res;
}

CommandOutput cmd_brw(const ExperimentConfig& cfg, OutputDir& out) {
  const auto s = setup(cfg);
  const auto& b = cfg.brw;
  BRWConfig brw{.mu = s.mu,
                .nu = OffspringDistribution::parse(b.offspring, b.lambda),
                .max_generation = b.max_generation,
                .population_budget = b.budget,
                .seed = cfg.seed,
                .record_depth = 0};
  validate_config(brw, s.rho);
  CommandOutput res;
  const auto runs = run_replicas(brw, {.replicas = b.replicas, .threads = cfg.threads});

  std::size_t radius = 0;
  int used = 0;
  for (const auto& t : runs) {
    res.truncated = res.truncated || t.truncated;
    if (t.truncated) continue;
    ++used;
    radius = std::max(radius, t.M.size());
  }
  CsvTable trace({"n", "M_n", "min_speed", "max_speed", "mean_population"});
  const std::size_t rows = std::max(radius, static_cast<std::size_t>(b.max_generation) + 1);
  for (std::size_t n = 0; n < rows; ++n) {
    double M = 0.0, pop = 0.0, lo = INFINITY, hi = 0.0;
    for (const auto& t : runs) {
      if (t.truncated) continue;
      if (n < t.M.size()) M += static_cast<double>(t.M[n]);
      if (n < t.population.size() && t.population[n] > 0) {
        pop += static_cast<double>(t.population[n]);
        lo = std::min(lo, t.min_speed[n]);
        hi = std::max(hi, t.max_speed[n]);
      }
    }
    const double k = std::max(used, 1);
    trace.add_row({cell(static_cast<int>(n)), cell(M / k), cell(std::isinf(lo) ? NAN : lo),
                   cell(used ? hi : NAN), cell(pop / k)});
  }
  out.write("brw_trace.csv", trace);

  const int n_s = static_cast<int>(std::floor(b.settle_fraction * b.max_generation));
  const auto g = growth_rate(runs, (n_s + 1) / 2, n_s);
  res.results["lambda"] = b.lambda;
  res.results["growth_pooled"] = g.H_pooled;
  res.results["growth_se"] = g.se_pooled;
  res.results["growth_median"] = g.H_median;
  res.results["window"] = {g.n_lo, g.n_hi};
  res.results["runs_used"] = g.runs_used;
  res.results["runs_truncated"] = g.runs_truncated;
  res.results["H_reference"] = pressure_growth(s.mu, b.lambda, s.rho);

  if (b.moment_replicas > 0) {
    BRWConfig mc = brw;
    mc.max_generation = b.moment_generations;
    mc.record_depth = b.record_depth;
    mc.prune_far = true;
    const auto rep = empirical_moments(mc, b.moment_replicas, b.pair_depth, cfg.threads);
    const auto table = GreenTable::make(s.mu, b.lambda, b.record_depth + 4, s.rho);
    const double sigma2 = brw.nu.second_moment();
    CsvTable mom({"kind", "x", "y", "mean", "se", "reference"});
    for (std::size_t i = 0; i < rep.words.size(); ++i)
      mom.add_row({"first", to_tokens(s.group, rep.words[i]), "", cell(rep.first[i].mean), cell(rep.first[i].se),
                   cell(table.value(rep.words[i]))});
    for (std::size_t p = 0; p < rep.pairs.size(); ++p) {
      const auto& x = rep.words[static_cast<std::size_t>(rep.pairs[p].first)];
      const auto& y = rep.words[static_cast<std::size_t>(rep.pairs[p].second)];
      const double bound = sigma2 * (table.isotropic() ? triple_green_sum(table.radial_engine(), s.group, x, y)
                                                       : triple_green_sum_ball(table, x, y, table.max_radius()));
      mom.add_row({"second", to_tokens(s.group, x), to_tokens(s.group, y), cell(rep.second[p].mean),
                   cell(rep.second[p].se), cell(bound)});
    }
    out.write("brw_moments.csv", mom);
    res.results["moment_replicas"] = rep.replicas;
    res.results["moment_truncated_runs"] = rep.truncated_runs;
    res.truncated = res.truncated || rep.truncated_runs > 0;
  }
  return res;
}

CommandOutput cmd_dimension(const ExperimentConfig& cfg, OutputDir& out) {
  const auto s = setup(cfg);
  const auto& d = cfg.dimension;
  DimensionConfig dc{.mu = s.mu,
                     .lambdas = d.lambda,
                     .a = d.a,
                     .replicas = d.replicas,
                     .seed = cfg.seed,
                     .threads = cfg.threads,
                     .offspring = d.offspring,
                     .final_population = d.final_population,
                     .max_generation = d.max_generation,
                     .settle_fraction = d.settle_fraction,
                     .eps = d.eps,
                     .population_budget = d.budget};
  std::vector<CoverEstimate> covers;
  const auto rows = dimension_report(dc, s.rho, &covers);
  CommandOutput res;
  CsvTable rep({"lambda", "H", "h_target", "box_est", "box_se", "corr_est", "corr_res", "replicas", "note"});
  CsvTable cc({"lambda", "k", "prefix_length", "N_k"});
  auto summary = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    rep.add_row({cell(r.lambda), cell(r.H), cell(r.h_target), cell(r.box.value), cell(r.box.stderr_),
                 cell(r.corr.value), cell(r.corr.residual), cell(r.replicas),
                 r.conjectural ? "conjectural target" : ""});
    for (std::size_t k = 0; k < covers[i].k.size(); ++k)
      cc.add_row({cell(r.lambda), cell(covers[i].k[k]), cell(covers[i].prefix_length[k]), cell(covers[i].N[k])});
    bool ok = true;
    if (!r.conjectural) {
      if (r.h_target > 0.0) {
        ok = std::abs(r.box.value / r.h_target - 1.0) <= d.tolerance &&
             std::abs(r.corr.value / r.h_target - 1.0) <= d.tolerance;
      } else {
        ok = r.box.value <= d.tolerance && r.corr.value <= d.tolerance;
      }
      res.failed = res.failed || !ok;
    }
    res.truncated = res.truncated || r.truncated > 0;
    summary.push_back({{"lambda", r.lambda},
                       {"h_target", r.h_target},
                       {"box", r.box.value},
                       {"corr", r.corr.value},
                       {"generations", r.generations},
                       {"prefix_length", r.prefix_length},
                       {"truncated_runs", r.truncated},
                       {"status", r.conjectural ? "conjectural" : ok ? "PASS" : "FAIL"}});
  }
  out.write("dimension_report.csv", rep);
  out.write("cover_counts.csv", cc);
  res.results["rows"] = summary;
  return res;
}

CommandOutput cmd_pressure(const ExperimentConfig& cfg, OutputDir& out) {
  const auto s = setup(cfg);
  const auto grid = cfg.pressure.r.empty() ? default_r_grid(s.rho, 10) : cfg.pressure.r;
  const Automaton a = build_automaton(s.group);
  CommandOutput res;
  CsvTable csv({"r", "pressure", "H", "gap", "H_series", "rel_diff", "horizon", "period"});
  double worst = 0.0;
  for (double r : grid) {
    check_weight(r, s.rho);
    PressureResult p;
    int h = cfg.pressure.horizon;
    if (h < 0 && s.mu.is_isotropic()) h = 0;
    if (h < 0) {
      const auto rp = refined_pressure(s.mu, r, s.rho);
      p = rp.result;
      h = rp.horizon;
    } else {
      const int margin = s.mu.is_isotropic() ? 0 : 6;
      p = pressure(build_potential(GreenTable::make(s.mu, r, h + 1 + margin, s.rho), h), a);
    }
    double H_series = NAN, rel = NAN;
    if (s.mu.is_isotropic()) {
      H_series = sphere_green_series(s.mu, r, 200, s.rho).H_estimate;
      rel = std::abs(p.H / H_series - 1.0);
      worst = std::max(worst, rel);
    }
    csv.add_row({cell(r), cell(p.pressure), cell(p.H), cell(p.gap), cell(H_series), cell(rel), cell(h), cell(p.period)});
  }
  out.write("pressure_curve.csv", csv);
  res.results["max_rel_diff"] = worst;
  if (s.mu.is_isotropic()) {
    const auto table = GreenTable::radial(s.mu, 1.0, 12);
    res.results["Hnr_identity_error_n10"] = verify_Hnr_identity(table, build_potential(table, 0), a, 10);
    res.failed = worst > cfg.pressure.tolerance;
  }
  res.results["status"] = res.failed ? "FAIL" : "PASS";
  return res;
}

CommandOutput cmd_exponent(const ExperimentConfig& cfg, OutputDir& out) {
  const auto s = setup(cfg);
  const auto& e = cfg.exponent;
  const double r_c = 1.0 / s.rho.inflated();
  const auto grid = dyadic_grid(r_c, e.j_lo, e.j_hi, e.j_step);
  ExponentOptions opt;
  opt.window_fraction = e.window_fraction;
  const auto fh = critical_exponent_fit(s.mu, s.rho, grid, opt);
  const auto fe = eta_exponent_fit(s.mu, s.rho, grid, opt);
  CommandOutput res;
  CsvTable csv({"target", "slope", "C_hat", "residual", "window", "slope_se", "expected", "status"});
  auto row = [&](const char* target, const ExponentFit& f, double expected) {
    const bool ok = std::abs(f.slope - expected) <= e.tolerance;
    res.failed = res.failed || !ok;
    csv.add_row({target, cell(f.slope), cell(f.C_hat), cell(f.residual),
                 format_double(f.window_lo) + ":" + format_double(f.window_hi), cell(f.slope_se), cell(expected),
                 ok ? "PASS" : "FAIL"});
    res.results[target] = {{"slope", f.slope}, {"C_hat", f.C_hat}, {"status", ok ? "PASS" : "FAIL"}};
  };
  row("H_gap", fh, 0.5);
  row("eta", fe, -0.5);
  out.write("exponent_fit.csv", csv);
  res.results["r_c"] = r_c;
  return res;
}

CommandOutput cmd_verify(const ExperimentConfig& cfg, OutputDir& out, std::ostream& log) {
  CheckOptions opt;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.tolerance_scale = cfg.verify.tolerance_scale;
  opt.scratch = out.path() / "verify_scratch";
  CommandOutput res;
  CsvTable csv({"id", "name", "anchor", "passed", "seconds", "time_limit", "detail"});
  int passed = 0, total = 0;
  for (const auto& info : check_catalog()) {
    const auto& only = cfg.verify.only;
    if (!only.empty() && std::find(only.begin(), only.end(), info.id) == only.end()) continue;
    if (only.empty() && cfg.quick && !info.quick) continue;
    const auto r = run_check(info.id, opt);
    log << format_check(r) << '\n' << std::flush;
    csv.add_row({cell(r.id), clean(r.name), clean(r.anchor), cell(r.passed), cell(r.seconds), cell(r.time_limit),
                 clean(r.detail)});
    ++total;
    passed += r.passed ? 1 : 0;
  }
  std::filesystem::remove_all(opt.scratch);
  out.write("verify.csv", csv);
  res.results["passed"] = passed;
  res.results["total"] = total;
  res.failed = passed != total;
  log << fmt::format("{} of {} checks passed\n", passed, total);
  return res;
}

int run_command(const std::string& name, const ExperimentConfig& cfg, const std::filesystem::path& out_path,
                std::ostream& log, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  nlohmann::ordered_json manifest;
  manifest["command"] = name;
  manifest["version"] = version_string();
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg.to_json();
  int code = exit_ok;
  std::unique_ptr<OutputDir> out;
  CommandOutput res;
  try {
    out = std::make_unique<OutputDir>(out_path);
    if (name == "green")
      res = cmd_green(cfg, *out);
    else if (name == "brw")
      res = cmd_brw(cfg, *out);
    else if (name == "dimension")
      res = cmd_dimension(cfg, *out);
    else if (name == "pressure")
      res = cmd_pressure(cfg, *out);
    else if (name == "exponent")
      res = cmd_exponent(cfg, *out);
    else if (name == "verify")
      res = cmd_verify(cfg, *out, log);
    else
      throw InvalidArgument(fmt::format("unknown command '{}'", name));
    if (res.failed) code = exit_verify;
  } catch (const BudgetExceeded& e) {
    code = exit_budget;
    manifest["error"] = e.what();
  } catch (const InvalidArgument& e) {
    code = exit_config;
    manifest["error"] = e.what();
  } catch (const std::exception& e) {
    code = exit_internal;
    manifest["error"] = e.what();
  }
  if (manifest.contains("error")) err << "error: " << manifest["error"].get<std::string>() << '\n';
  manifest["truncated"] = res.truncated;
  manifest["results"] = res.results;
  manifest["exit_code"] = code;
  manifest["runtime_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  if (out) {
    manifest["digests"] = out->digests();
    try {
      out->write("manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      if (code == exit_ok) code = exit_internal;
    }
  }
  return code;
}

}  // namespace hypbrw
