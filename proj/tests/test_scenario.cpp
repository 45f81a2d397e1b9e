#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "surge/scenario.hpp"

using namespace surge;

namespace {

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_scenario(in);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("bundled canonical scenario") {
  const Scenario s = load_scenario(std::filesystem::path(SURGE_SOURCE_DIR) / "scenarios/canonical.scenario");
  const PlatformScenario& p = s.platform;
  CHECK(p.duration == 6.0);
  CHECK(p.dt == 0.002);
  CHECK(p.samples() == 3000);
  CHECK(p.selector.horizon_samples() == 250);
  CHECK(p.selector.dt == p.dt);
  CHECK(p.selector.we(0) == 1e-3);
  CHECK(p.selector.we(1) == 1.0);
  CHECK(p.selector.kind == IndexKind::kErrorOnly);
  CHECK(p.uncertainty.q_w_gain == 1.1);
  CHECK(p.controllers == std::vector<int>{0, 1, 2, 3});
  CHECK(p.faults.empty());
  CHECK(s.output_dir == "out/canonical");
  CHECK(s.profile_source == ProfileSource::kCanonical);
  CHECK(p.disturbance.knots.size() == canonical_profile().knots.size());
}

TEST_CASE("minimal scenario takes the defaults") {
  std::istringstream in("duration_hours = 1\n");
  const Scenario s = parse_scenario(in);
  CHECK(s.platform.samples() == 500);
  CHECK(s.platform.reference.v == 10.0);
  CHECK(s.platform.controllers.size() == 4);
}

TEST_CASE("sections, faults and index kind") {
  std::istringstream in(
      "duration_hours = 2   # short\n"
      "[selector]\n"
      "index = error_plus_move\n"
      "wu = 1e-6, 2e-6\n"
      "[controllers]\n"
      "enabled = 0\n"
      "[faults]\n"
      "interval = 0.5, 0.7\n"
      "interval = 1.2, 1.4\n"
      "[disturbance]\n"
      "profile = random\n"
      "seed = 9\n");
  const Scenario s = parse_scenario(in);
  CHECK(s.platform.selector.kind == IndexKind::kErrorPlusMove);
  CHECK(s.platform.selector.wu(1) == 2e-6);
  CHECK(s.platform.controllers == std::vector<int>{0});
  REQUIRE(s.platform.faults.size() == 2);
  CHECK(s.platform.faults[1].start == 1.2);
  CHECK(s.platform.faults[1].end == 1.4);
  CHECK(s.profile_source == ProfileSource::kRandom);
  CHECK(s.seed == 9);
  const DisturbanceProfile again = random_profile(9, 2.0);
  REQUIRE(again.knots.size() == s.platform.disturbance.knots.size());
  CHECK(again.knots.back().rho_i == s.platform.disturbance.knots.back().rho_i);
}

TEST_CASE("errors carry line numbers") {
  CHECK(error_of("duration_hours = 1\nbogus = 3\n").find("line 2") != std::string::npos);
  CHECK(error_of("[nowhere]\n").find("line 1") != std::string::npos);
  CHECK(error_of("dt_hours = 0.002\ndt_hours = 0.004\n").find("line 2") != std::string::npos);
  CHECK(error_of("duration_hours = six\n").find("line 1") != std::string::npos);
  CHECK(error_of("[selector]\nindex = median\n").find("line 2") != std::string::npos);
  CHECK(error_of("no equals sign\n").find("line 1") != std::string::npos);
  CHECK(error_of("[faults]\ninterval = 1\n").find("line 2") != std::string::npos);
}

TEST_CASE("validation failures are reported") {
  CHECK_FALSE(error_of("dt_hours = 0.01\n").empty());  // w_B dt = 1
  CHECK_FALSE(error_of("duration_hours = 1.0011\n").empty());
  CHECK_FALSE(error_of("[controllers]\nenabled = 0, 5\n").empty());
  CHECK_FALSE(error_of("[selector]\nhorizon_hours = 0.05\n").empty());
  CHECK_FALSE(error_of("[disturbance]\nprofile = file\nfile = /nonexistent/profile.csv\n").empty());
}

TEST_CASE("profile file resolves against the scenario directory") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "surge_scenario_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "feed.csv") << "time_hours,rho_i\n0,1.5\n0.4,1.6\n";
    std::ofstream(dir / "run.scenario")
        << "duration_hours = 1\n[disturbance]\nprofile = file\nfile = feed.csv\n";
  }
  const Scenario s = load_scenario(dir / "run.scenario");
  REQUIRE(s.platform.disturbance.knots.size() == 2);
  CHECK(s.platform.disturbance.knots[1].rho_i == 1.6);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(load_scenario(dir / "run.scenario"));
}
