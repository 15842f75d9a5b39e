#pragma once

// The verification suite shared by `hypbrw verify` and the acceptance test
// binary: one check per acceptance criterion, each timed against its budget.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hypbrw {

struct CheckOptions {
  std::uint64_t seed = 42;
  int threads = 1;
  /// Multiplies every tolerance width and threshold.
  double tolerance_scale = 1.0;
  /// Scratch space for checks that run commands.
  std::filesystem::path scratch;
};

struct CheckResult {
  int id = 0;
  std::string name;
  /// The identity or bound being tested, stated in words.
  std::string anchor;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double time_limit = 0.0;
};

struct CheckInfo {
  int id;
  std::string name;
  std::string anchor;
  double time_limit;
  /// Part of the sub-minute subset used by `verify --quick`.
  bool quick;
};

const std::vector<CheckInfo>& check_catalog();

/// Runs one check.  Exceptions inside the check become a failed result.
CheckResult run_check(int id, const CheckOptions& opt);

/// "[PASS] 07 critical exponent ... (12.3 s / 120 s) detail".
std::string format_check(const CheckResult& r);

}  // namespace hypbrw
