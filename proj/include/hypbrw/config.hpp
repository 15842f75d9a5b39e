#pragma once

// Experiment configuration: a JSON document whose keys are checked strictly.
// The grammar is described in README.md.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypbrw {

struct GreenSettings {
  std::vector<double> r{1.0, 1.05, 1.1};
  /// Spheres n = 0..N in green_series.csv.
  int N = 200;
  int rho_depth = 2000;
};

struct BrwSettings {
  double lambda = 1.1;
  std::string offspring = "two_point:2";
  int replicas = 20;
  int max_generation = 120;
  double settle_fraction = 0.2;
  std::uint64_t budget = 10'000'000;
  /// Replicas for brw_moments.csv; 0 skips the moment pass.
  int moment_replicas = 0;
  int moment_generations = 100;
  int record_depth = 4;
  int pair_depth = 3;
};

struct DimensionSettings {
  std::vector<double> lambda{1.0, 1.05, 1.1};
  double a = 2.718281828459045;
  int replicas = 40;
  double eps = 0.1;
  std::string offspring = "two_point:2";
  double final_population = 1e5;
  int max_generation = 240;
  double settle_fraction = 0.2;
  std::uint64_t budget = 10'000'000;
  /// Relative tolerance of both estimates against log_a H(lambda).
  double tolerance = 0.1;
};

struct PressureSettings {
  /// Empty: 10 points from 1 to 1/rho_hat.
  std::vector<double> r;
  /// -1: 0 for isotropic laws, refined from 2 otherwise.
  int horizon = -1;
  /// Tolerance on |H_pressure / H_series - 1| for the summary flag.
  double tolerance = 1e-3;
};

struct ExponentSettings {
  double j_lo = 6.0;
  double j_hi = 14.0;
  double j_step = 1.0;
  double window_fraction = 0.125;
  double tolerance = 0.05;
};

struct VerifySettings {
  /// Multiplies every tolerance width; values < 1 tighten the suite.
  double tolerance_scale = 1.0;
  /// Check ids to run; empty runs all (or the quick subset).
  std::vector<int> only;
};

struct ExperimentConfig {
  std::string group = "free:2";
  std::string walk = "srw";
  std::uint64_t seed = 42;
  std::string out = "out";
  int threads = 1;
  bool quick = false;
  GreenSettings green;
  BrwSettings brw;
  DimensionSettings dimension;
  PressureSettings pressure;
  ExponentSettings exponent;
  VerifySettings verify;

  nlohmann::ordered_json to_json() const;
};

/// Throws InvalidArgument on unknown keys, wrong types or bad values.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& p);

}  // namespace hypbrw
