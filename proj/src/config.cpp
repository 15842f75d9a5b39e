#include "hypbrw/config.hpp"

#include <set>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"
#include "hypbrw/report.hpp"

namespace hypbrw {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InvalidArgument(fmt::format("config: '{}' must be an object", where));
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw InvalidArgument(fmt::format("config: unknown key '{}{}'", where.empty() ? "" : where + ".", k));
}

template <class T>
void take(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(fmt::format("config: '{}{}' has the wrong type", where.empty() ? "" : where + ".", key));
  }
}

void positive(double v, const char* name) {
  if (!(v > 0.0)) throw InvalidArgument(fmt::format("config: {} must be positive", name));
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j, "", {"group", "walk", "seed", "out", "threads", "quick", "green", "brw", "dimension", "pressure",
                     "exponent", "verify"});
  take(j, "group", c.group, "");
  take(j, "walk", c.walk, "");
  take(j, "seed", c.seed, "");
  take(j, "out", c.out, "");
  take(j, "threads", c.threads, "");
  take(j, "quick", c.quick, "");
  if (j.contains("green")) {
    const auto& g = j["green"];
    check_keys(g, "green", {"r", "N", "rho_depth"});
    take(g, "r", c.green.r, "green");
    take(g, "N", c.green.N, "green");
    take(g, "rho_depth", c.green.rho_depth, "green");
  }
  if (j.contains("brw")) {
    const auto& b = j["brw"];
    check_keys(b, "brw", {"lambda", "offspring", "replicas", "max_generation", "settle_fraction", "budget",
                          "moment_replicas", "moment_generations", "record_depth", "pair_depth"});
    take(b, "lambda", c.brw.lambda, "brw");
    take(b, "offspring", c.brw.offspring, "brw");
    take(b, "replicas", c.brw.replicas, "brw");
    take(b, "max_generation", c.brw.max_generation, "brw");
    take(b, "settle_fraction", c.brw.settle_fraction, "brw");
    take(b, "budget", c.brw.budget, "brw");
    take(b, "moment_replicas", c.brw.moment_replicas, "brw");
    take(b, "moment_generations", c.brw.moment_generations, "brw");
    take(b, "record_depth", c.brw.record_depth, "brw");
    take(b, "pair_depth", c.brw.pair_depth, "brw");
  }
  if (j.contains("dimension")) {
    const auto& d = j["dimension"];
    check_keys(d, "dimension", {"lambda", "a", "replicas", "eps", "offspring", "final_population", "max_generation",
                                "settle_fraction", "budget", "tolerance"});
    take(d, "lambda", c.dimension.lambda, "dimension");
    take(d, "a", c.dimension.a, "dimension");
    take(d, "replicas", c.dimension.replicas, "dimension");
    take(d, "eps", c.dimension.eps, "dimension");
    take(d, "offspring", c.dimension.offspring, "dimension");
    take(d, "final_population", c.dimension.final_population, "dimension");
    take(d, "max_generation", c.dimension.max_generation, "dimension");
    take(d, "settle_fraction", c.dimension.settle_fraction, "dimension");
    take(d, "budget", c.dimension.budget, "dimension");
    take(d, "tolerance", c.dimension.tolerance, "dimension");
  }
  if (j.contains("pressure")) {
    const auto& p = j["pressure"];
    check_keys(p, "pressure", {"r", "horizon", "tolerance"});
    take(p, "r", c.pressure.r, "pressure");
    take(p, "horizon", c.pressure.horizon, "pressure");
    take(p, "tolerance", c.pressure.tolerance, "pressure");
  }
  if (j.contains("exponent")) {
    const auto& e = j["exponent"];
    check_keys(e, "exponent", {"j_lo", "j_hi", "j_step", "window_fraction", "tolerance"});
    take(e, "j_lo", c.exponent.j_lo, "exponent");
    take(e, "j_hi", c.exponent.j_hi, "exponent");
    take(e, "j_step", c.exponent.j_step, "exponent");
    take(e, "window_fraction", c.exponent.window_fraction, "exponent");
    take(e, "tolerance", c.exponent.tolerance, "exponent");
  }
  if (j.contains("verify")) {
    const auto& v = j["verify"];
    check_keys(v, "verify", {"tolerance_scale", "only"});
    take(v, "tolerance_scale", c.verify.tolerance_scale, "verify");
    take(v, "only", c.verify.only, "verify");
  }

  if (c.threads < 1) throw InvalidArgument("config: threads must be >= 1");
  if (c.green.N < 2) throw InvalidArgument("config: green.N must be >= 2");
  if (c.brw.replicas < 1) throw InvalidArgument("config: brw.replicas must be >= 1");
  if (c.brw.max_generation < 1) throw InvalidArgument("config: brw.max_generation must be >= 1");
  if (c.brw.moment_replicas < 0) throw InvalidArgument("config: brw.moment_replicas must be >= 0");
  if (c.dimension.replicas < 1) throw InvalidArgument("config: dimension.replicas must be >= 1");
  positive(c.brw.settle_fraction, "brw.settle_fraction");
  positive(c.dimension.settle_fraction, "dimension.settle_fraction");
  positive(c.dimension.final_population, "dimension.final_population");
  positive(c.exponent.j_step, "exponent.j_step");
  positive(c.exponent.tolerance, "exponent.tolerance");
  positive(c.pressure.tolerance, "pressure.tolerance");
  positive(c.dimension.tolerance, "dimension.tolerance");
  if (!(c.dimension.a > 1.0)) throw InvalidArgument("config: dimension.a must exceed 1");
  if (!(c.verify.tolerance_scale >= 0.0)) throw InvalidArgument("config: verify.tolerance_scale must be >= 0");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& p) {
  json j;
  try {
    j = json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw InvalidArgument(fmt::format("config {}: {}", p.string(), e.what()));
  }
  return config_from_json(j);
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["group"] = group;
  j["walk"] = walk;
  j["seed"] = seed;
  j["threads"] = threads;
  j["quick"] = quick;
  j["green"] = {{"r", green.r}, {"N", green.N}, {"rho_depth", green.rho_depth}};
  j["brw"] = {{"lambda", brw.lambda},
              {"offspring", brw.offspring},
              {"replicas", brw.replicas},
              {"max_generation", brw.max_generation},
              {"settle_fraction", brw.settle_fraction},
              {"budget", brw.budget},
              {"moment_replicas", brw.moment_replicas},
              {"moment_generations", brw.moment_generations},
              {"record_depth", brw.record_depth},
              {"pair_depth", brw.pair_depth}};
  j["dimension"] = {{"lambda", dimension.lambda},
                    {"a", dimension.a},
                    {"replicas", dimension.replicas},
                    {"eps", dimension.eps},
                    {"offspring", dimension.offspring},
                    {"final_population", dimension.final_population},
                    {"max_generation", dimension.max_generation},
                    {"settle_fraction", dimension.settle_fraction},
                    {"budget", dimension.budget},
                    {"tolerance", dimension.tolerance}};
  j["pressure"] = {{"r", pressure.r}, {"horizon", pressure.horizon}, {"tolerance", pressure.tolerance}};
  j["exponent"] = {{"j_lo", exponent.j_lo},
                   {"j_hi", exponent.j_hi},
                   {"j_step", exponent.j_step},
                   {"window_fraction", exponent.window_fraction},
                   {"tolerance", exponent.tolerance}};
  j["verify"] = {{"tolerance_scale", verify.tolerance_scale}, {"only", verify.only}};
  return j;
}

}  // namespace hypbrw
