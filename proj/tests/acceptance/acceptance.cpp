// One line per acceptance criterion; exit status 1 if any fails.  Seed 42,
// tolerances as pinned in the check catalog.

#include <cstdio>
#include <filesystem>

#include "hypbrw/checks.hpp"

int main() {
  hypbrw::CheckOptions opt;
  opt.seed = 42;
  opt.threads = 1;
  opt.scratch = std::filesystem::temp_directory_path() / "hypbrw_acceptance";
  int failed = 0;
  for (const auto& info : hypbrw::check_catalog()) {
    const auto r = hypbrw::run_check(info.id, opt);
    std::printf("%s\n", hypbrw::format_check(r).c_str());
    std::fflush(stdout);
    failed += r.passed ? 0 : 1;
  }
  std::filesystem::remove_all(opt.scratch);
  std::printf("%d of %zu criteria passed\n", static_cast<int>(hypbrw::check_catalog().size()) - failed,
              hypbrw::check_catalog().size());
  return failed == 0 ? 0 : 1;
}
