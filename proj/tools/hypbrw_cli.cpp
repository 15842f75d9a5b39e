#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "hypbrw/commands.hpp"
#include "hypbrw/errors.hpp"

using namespace hypbrw;

int main(int argc, char** argv) {
  CLI::App app{"Branching random walks on free groups: Green functions, trace growth and limit sets"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1, 1);

  std::string config_path, out, group, walk;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<double> r, lambda;
  bool quick = false;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", out, "output directory (else $HYPBRW_OUT, else the config's out)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quick", quick, "verify: run only the sub-minute checks");
  app.add_option("--group", group, "free:q or z2:d");
  app.add_option("--walk", walk, "srw, lazy:p0 or table:w=p;...");
  app.add_option("--r", r, "weights for green and pressure")->delimiter(',');
  app.add_option("--lambda", lambda, "mean offspring for brw and dimension")->delimiter(',');

  for (const char* name : {"green", "brw", "dimension", "pressure", "exponent", "verify"})
    app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (quick) cfg.quick = true;
    if (!group.empty()) cfg.group = group;
    if (!walk.empty()) cfg.walk = walk;
    if (!r.empty()) cfg.green.r = cfg.pressure.r = r;
    if (!lambda.empty()) {
      if (name == "brw" && lambda.size() != 1) throw InvalidArgument("brw takes a single --lambda");
      cfg.brw.lambda = lambda.front();
      cfg.dimension.lambda = lambda;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  }
  if (out.empty()) {
    const char* env = std::getenv("HYPBRW_OUT");
    out = env && *env ? env : cfg.out;
  }
  return run_command(name, cfg, out, std::cout, std::cerr);
}
