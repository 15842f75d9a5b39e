#pragma once

// Subcommands of the hypbrw tool.  Each writes its CSV files into an output
// directory and returns a JSON summary; run_command adds the manifest and
// maps failures to exit codes.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "hypbrw/config.hpp"
#include "hypbrw/report.hpp"

namespace hypbrw {

inline constexpr int exit_ok = 0;
inline constexpr int exit_internal = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_budget = 3;
inline constexpr int exit_verify = 4;

struct CommandOutput {
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  bool truncated = false;
  /// The command's own pass/fail summary failed (exit 4).
  bool failed = false;
};

CommandOutput cmd_green(const ExperimentConfig& cfg, OutputDir& out);
CommandOutput cmd_brw(const ExperimentConfig& cfg, OutputDir& out);
CommandOutput cmd_dimension(const ExperimentConfig& cfg, OutputDir& out);
CommandOutput cmd_pressure(const ExperimentConfig& cfg, OutputDir& out);
CommandOutput cmd_exponent(const ExperimentConfig& cfg, OutputDir& out);
/// Runs the verification suite; `log` receives one line per check.
CommandOutput cmd_verify(const ExperimentConfig& cfg, OutputDir& out, std::ostream& log);

/// Dispatches by name, writes manifest.json and returns the exit code.
int run_command(const std::string& name, const ExperimentConfig& cfg, const std::filesystem::path& out,
                std::ostream& log, std::ostream& err);

const char* version_string();

}  // namespace hypbrw
