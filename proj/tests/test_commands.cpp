#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "surge/commands.hpp"

namespace fs = std::filesystem;
using namespace surge;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("surge_commands_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

Scenario scenario_from(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

}  // namespace

TEST_CASE("output directory resolution") {
  ::unsetenv("SURGE_OUT_DIR");
  CHECK(resolve_output_dir(std::nullopt, "fallback") == fs::path("fallback"));
  ::setenv("SURGE_OUT_DIR", "/tmp/from_env", 1);
  CHECK(resolve_output_dir(std::nullopt, "fallback") == fs::path("/tmp/from_env"));
  CHECK(resolve_output_dir(std::string("flag"), "fallback") == fs::path("flag"));
  ::unsetenv("SURGE_OUT_DIR");
}

TEST_CASE("canonical simulation writes the trace and horizon table") {
  const fs::path dir = fresh_dir("canonical");
  const Scenario s = load_scenario(fs::path(SURGE_SOURCE_DIR) / "scenarios/canonical.scenario");
  std::ostringstream log;
  const SimulationResult r = cmd_simulate(s, dir, log);
  CHECK(r.trace.samples.size() == 3000);
  CHECK(count_lines(dir / "trace.csv") == 3001);
  CHECK(count_lines(dir / "horizons.csv") == 13);
  std::ifstream trace(dir / "trace.csv");
  std::string header;
  std::getline(trace, header);
  CHECK(header.rfind("t_hours,", 0) == 0);
  std::ifstream horizons(dir / "horizons.csv");
  std::getline(horizons, header);
  CHECK(header == "horizon,t_start_hours,t_end_hours,active_id,selected_id,J_0,J_1,J_2,J_3,"
                  "flagged_0,flagged_1,flagged_2,flagged_3");
  CHECK(slurp(dir / "summary.txt") == log.str());
  CHECK(r.standalone.size() == 4);

  const fs::path again = fresh_dir("canonical_again");
  std::ostringstream quiet;
  cmd_simulate(s, again, quiet);
  for (const char* f : {"trace.csv", "horizons.csv", "summary.txt"}) {
    CHECK(slurp(dir / f) == slurp(again / f));
  }
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("a PI-only registry matches the standalone PI run") {
  const Scenario s = scenario_from("duration_hours = 1.5\n[controllers]\nenabled = 0\n");
  const fs::path dir = fresh_dir("pi_only");
  std::ostringstream log;
  const SimulationResult r = cmd_simulate(s, dir, log);
  REQUIRE(r.standalone.size() == 1);
  CHECK(r.platform_sse.sse_v == r.standalone[0].sse.sse_v);
  CHECK(r.platform_sse.sse_rho == r.standalone[0].sse.sse_rho);
  CHECK(r.platform_sse.sse_total == r.standalone[0].sse.sse_total);
  fs::remove_all(dir);
}

TEST_CASE("malformed scenarios exit nonzero and write nothing") {
  const fs::path dir = fresh_dir("malformed");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.scenario") << "duration_hours = 1\n[selector]\nbandwidth = 1000\n";
  const fs::path out = dir / "out";
  const std::string cmd = std::string("\"") + SURGE_CLI + "\" simulate \"" +
                          (dir / "bad.scenario").string() + "\" --out \"" + out.string() +
                          "\" > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) != 0);
  CHECK_FALSE(fs::exists(out / "trace.csv"));
  CHECK_FALSE(fs::exists(out / "summary.txt"));
  fs::remove_all(dir);
}

TEST_CASE("step study: zero step is flat") {
  StepStudyOptions o;
  o.controller = 1;
  o.step = 0.0;
  o.q_w_gain = 1.0;
  const StepStudyResult r = run_step_study(o);
  CHECK(r.settling_time == 0.0);
  for (const TraceSample& s : r.trace.samples) {
    CHECK(std::abs(s.y.v - 10.0) < 1e-9);
    CHECK(std::abs(s.y.rho - 1.4) < 1e-9);
  }
}

TEST_CASE("step study files") {
  const fs::path dir = fresh_dir("step");
  StepStudyOptions o;
  o.controller = 0;
  std::ostringstream log;
  const StepStudyResult r = cmd_step_study(o, dir, log);
  CHECK(r.step_time == doctest::Approx(0.5));
  CHECK(count_lines(dir / "step_0.csv") == 1001);
  CHECK(slurp(dir / "step_0_summary.txt") == log.str());
  StepStudyOptions unknown;
  unknown.controller = 8;
  CHECK_THROWS(cmd_step_study(unknown, dir, log));
  fs::remove_all(dir);
}

TEST_CASE("analyze writes one sweep row per frequency") {
  const fs::path dir = fresh_dir("analyze");
  std::ostringstream log;
  const ControllabilityReport r = cmd_analyze(std::nullopt, dir, log);
  CHECK(count_lines(dir / "sweep_g.csv") == 201);
  CHECK(count_lines(dir / "sweep_gd.csv") == 201);
  CHECK(slurp(dir / "report.txt") == log.str());
  CHECK(r.zeros.empty());
  fs::remove_all(dir);
}

TEST_CASE("analyze with a custom diagonal model") {
  const fs::path dir = fresh_dir("analyze_custom");
  fs::create_directories(dir);
  std::ofstream(dir / "diag.model") << "a = -1 0; 0 -2\nb = 1 0; 0 3\nc = 1 0; 0 1\n";
  std::ostringstream log;
  const ControllabilityReport r = cmd_analyze(dir / "diag.model", dir / "out", log);
  CHECK((r.rga_low - ComplexMatrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(r.controllability.rank == 2);
  fs::remove_all(dir);
}
