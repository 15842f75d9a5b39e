#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <sys/wait.h>

#include "hypbrw/checks.hpp"
#include "hypbrw/commands.hpp"
#include "hypbrw/errors.hpp"

using namespace hypbrw;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hypbrw_test_" + name);
  fs::remove_all(p);
  return p;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(read_file(dir / "manifest.json")); }

int run_cli(const std::string& args) {
  const int st = std::system((std::string(HYPBRW_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

ExperimentConfig light() {
  ExperimentConfig cfg;
  cfg.green.r = {1.0, 1.1};
  cfg.green.N = 40;
  cfg.green.rho_depth = 500;
  return cfg;
}

}  // namespace

TEST_CASE("csv formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(NAN) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  CsvTable t({"a", "b"});
  t.add_row({cell(1), cell(2.5)});
  CHECK(t.str() == "a,b\n1,2.5\n");
  CHECK_THROWS_AS(t.add_row({"x"}), InvalidArgument);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config parsing is strict") {
  using nlohmann::json;
  const auto c = config_from_json(json::parse(R"({"group":"z2:4","brw":{"lambda":1.05,"replicas":3}})"));
  CHECK(c.group == "z2:4");
  CHECK(c.brw.lambda == 1.05);
  CHECK(c.brw.replicas == 3);
  CHECK(c.seed == 42);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"grup":"free:2"})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"brw":{"lamda":1.1}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"seed":"x"})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"threads":0})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"dimension":{"a":1.0}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(json::parse("[1,2]")), InvalidArgument);
  // The echo in the manifest parses back to the same settings.
  const auto back = config_from_json(json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("green command writes reproducible files") {
  const auto a = fresh_dir("green_a"), b = fresh_dir("green_b");
  std::ostringstream log, err;
  REQUIRE(run_command("green", light(), a, log, err) == exit_ok);
  REQUIRE(run_command("green", light(), b, log, err) == exit_ok);
  const auto ma = manifest(a), mb = manifest(b);
  CHECK(ma["digests"] == mb["digests"]);
  CHECK(ma["digests"].size() == 3);
  CHECK(ma["command"] == "green");
  CHECK(ma["exit_code"] == 0);
  CHECK(read_file(a / "green_summary.csv").rfind("r,H_estimate,", 0) == 0);
  const auto csv = read_file(a / "green_series.csv");
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(sha256_hex(csv) == ma["digests"]["green_series.csv"]);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("errors map to exit codes") {
  std::ostringstream log, err;
  auto cfg = light();
  cfg.green.r = {1.2};
  const auto d = fresh_dir("regime");
  CHECK(run_command("green", cfg, d, log, err) == exit_config);
  CHECK(manifest(d)["error"].get<std::string>().find("critical weight") != std::string::npos);
  CHECK(err.str().find("critical weight") != std::string::npos);

  cfg = light();
  cfg.walk = "table:a1=0.2;A1=0.2;a2=0.2;A2=0.2;a1 a2=0.1;A2 A1=0.1";
  cfg.green.N = 200;
  CHECK(run_command("green", cfg, fresh_dir("budget"), log, err) == exit_budget);

  cfg = light();
  cfg.brw.lambda = 1.2;
  CHECK(run_command("brw", cfg, fresh_dir("brw_regime"), log, err) == exit_config);
  CHECK(run_command("plot", light(), fresh_dir("unknown"), log, err) == exit_config);
  for (const char* n : {"regime", "budget", "brw_regime", "unknown"}) fs::remove_all(fresh_dir(n));
}

TEST_CASE("verify reports an injected bad tolerance by name") {
  auto cfg = light();
  cfg.verify.only = {1, 2};
  const auto d = fresh_dir("verify");
  {
    std::ostringstream log, err;
    CHECK(run_command("verify", cfg, d, log, err) == exit_ok);
    CHECK(log.str().find("[PASS] 01 spectral radius") != std::string::npos);
  }
  cfg.verify.tolerance_scale = 1e-12;
  std::ostringstream log, err;
  CHECK(run_command("verify", cfg, d, log, err) == exit_verify);
  CHECK(log.str().find("[FAIL] 01 spectral radius") != std::string::npos);
  CHECK(log.str().find("[FAIL] 02 growth rate bounds") != std::string::npos);
  CHECK(read_file(d / "verify.csv").find("growth rate bounds") != std::string::npos);
  fs::remove_all(d);
}

TEST_CASE("check catalog") {
  const auto& c = check_catalog();
  REQUIRE(c.size() == 13);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i].id == static_cast<int>(i) + 1);
    CHECK(c[i].time_limit > 0);
    CHECK_FALSE(c[i].anchor.empty());
  }
  CHECK_THROWS_AS(run_check(99, {}), InvalidArgument);
}

TEST_CASE("command line exit codes") {
  const auto d = fresh_dir("cli");
  CHECK(run_cli("green --r 1.0,1.05,1.1 --out " + d.string()) == exit_ok);
  const auto csv = read_file(d / "green_summary.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(run_cli("green --r 1.2 --out " + d.string()) == exit_config);
  CHECK(run_cli("brw --lambda 1.2 --out " + d.string()) == exit_config);
  CHECK(run_cli("green --seed notanumber") == exit_config);
  CHECK(run_cli("") == exit_config);
  CHECK(run_cli("--config /nonexistent/cfg.json green") == exit_config);
  // The environment variable is used when --out is absent.
  const auto e = fresh_dir("cli_env");
  CHECK(run_cli("pressure --r 1.0,1.1 --out '' ") == exit_ok);
  const int st = std::system(("HYPBRW_OUT=" + e.string() + " " + HYPBRW_CLI + " pressure --r 1.0,1.1 >/dev/null").c_str());
  CHECK(st == 0);
  CHECK(fs::exists(e / "pressure_curve.csv"));
  fs::remove_all(d);
  fs::remove_all(e);
  fs::remove_all("out");
}
