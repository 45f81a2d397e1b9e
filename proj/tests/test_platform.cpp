#include <doctest.h>

#include <cmath>

#include "surge/platform.hpp"
#include "surge/registry.hpp"

using namespace surge;

namespace {

PlatformScenario short_run(double hours) {
  PlatformScenario sc;
  sc.duration = hours;
  return sc;
}

}  // namespace

TEST_CASE("switching configuration guard") {
  SelectorConfig cfg;
  CHECK(cfg.bandwidth * cfg.dt == doctest::Approx(0.2));
  CHECK_NOTHROW(validate_switching_config(cfg));

  SelectorConfig fast = cfg;
  fast.dt = 0.001;  // w_B dt = 0.1
  fast.horizon = 0.5;
  CHECK_THROWS_AS(validate_switching_config(fast), ConfigError);

  SelectorConfig slow = cfg;
  slow.dt = 0.01;  // w_B dt = 1.0
  CHECK_THROWS_AS(validate_switching_config(slow), ConfigError);

  SelectorConfig edge = cfg;
  edge.dt = 0.006;  // w_B dt = 0.6
  edge.horizon = 0.6;
  CHECK_NOTHROW(validate_switching_config(edge));

  SelectorConfig short_horizon = cfg;
  short_horizon.horizon = 0.08;  // below 10 / w_B = 0.1 h
  CHECK_THROWS_AS(validate_switching_config(short_horizon), ConfigError);

  SelectorConfig misaligned = cfg;
  misaligned.horizon = 0.5011;
  CHECK_THROWS_AS(validate_switching_config(misaligned), ConfigError);

  SelectorConfig negative = cfg;
  negative.wu(1) = -1.0;
  CHECK_THROWS_AS(validate_switching_config(negative), ConfigError);
}

TEST_CASE("performance index") {
  SelectorConfig cfg;
  const std::vector<Reference> r{{10.0, 1.4}};
  CHECK(performance_index(r, {{10.0, 1.4}}, {{600.0, 150.0}}, cfg) == 0.0);
  const double one = performance_index(r, {{10.0, 1.3}}, {{600.0, 150.0}}, cfg);
  CHECK(one == doctest::Approx(0.01).epsilon(1e-12));

  cfg.kind = IndexKind::kErrorPlusMove;
  cfg.wu = {1e-6, 1e-6};
  const double moved =
      performance_index(r, {{10.0, 1.3}}, {{700.0, 150.0}}, cfg, ControlInput{600.0, 150.0});
  CHECK(moved - one == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(performance_index(r, {{10.0, 1.3}}, {{700.0, 150.0}}, cfg) == doctest::Approx(one));

  CHECK_THROWS_AS(performance_index(r, {}, {}, cfg), ConfigError);
}

TEST_CASE("performance index is nonnegative") {
  SelectorConfig cfg;
  cfg.kind = IndexKind::kErrorPlusMove;
  cfg.wu = {1e-4, 2e-4};
  std::vector<Reference> r;
  std::vector<PlantState> y;
  std::vector<ControlInput> u;
  for (int k = 0; k < 50; ++k) {
    r.push_back({10.0, 1.4});
    y.push_back({10.0 + std::sin(0.3 * k), 1.4 + 0.01 * std::cos(k)});
    u.push_back({600.0 + 20.0 * std::sin(k), 150.0 - 5.0 * k});
  }
  CHECK(performance_index(r, y, u, cfg) >= 0.0);
}

TEST_CASE("constraint enforcement: box then rate") {
  const PlantLimits limits;
  const Enforcement inside = enforce_constraints({650.0, 120.0}, {600.0, 150.0}, limits);
  CHECK_FALSE(inside.clamped);
  CHECK(inside.applied.q_i == 650.0);

  const Enforcement box = enforce_constraints({1300.0, -5.0}, {1150.0, 50.0}, limits);
  CHECK(box.clamped);
  CHECK(box.applied.q_i == 1200.0);
  CHECK(box.applied.q_w == 0.0);

  const Enforcement rate = enforce_constraints({900.0, 400.0}, {600.0, 150.0}, limits);
  CHECK(rate.clamped);
  CHECK(rate.applied.q_i == 700.0);
  CHECK(rate.applied.q_w == 250.0);

  // Rate wins when the previous input sits outside the reachable box edge.
  const Enforcement both = enforce_constraints({100.0, 0.0}, {500.0, 90.0}, limits);
  CHECK(both.applied.q_i == 400.0);
  CHECK(both.applied.q_w == 0.0);
}

TEST_CASE("selection rules") {
  const std::vector<EvaluationRecord> records{
      {0, 5.0, false, 0}, {1, 2.0, false, 0}, {2, 2.0, false, 0}, {3, 1.0, true, 0}};
  CHECK(select(records, 0) == 1);
  CHECK(select(records, 2) == 2);  // tie keeps the incumbent
  CHECK(select(records, 3) == 1);  // flagged record excluded
  const std::vector<EvaluationRecord> flagged{{1, 1.0, true, 0}, {2, 0.5, true, 0}};
  CHECK(select(flagged, 2) == kLocalPi);
  CHECK(select({}, 3) == kLocalPi);
}

TEST_CASE("evaluation flags a loop that clamps") {
  SimLoop loop{make_controller(kLocalPi, 0.002), {5.0, 1.4}, {600.0, 150.0}};
  std::vector<SimLoop*> loops{&loop};
  const SelectorConfig cfg;
  const HorizonEvaluation ev = evaluate_horizon(loops, EvaluationModel{}, {10.0, 1.4},
                                                canonical_profile(), {0, 0, 50}, cfg);
  REQUIRE(ev.records.size() == 1);
  CHECK(ev.records[0].flagged);  // 5 m3 below the setpoint saturates the PI
  CHECK(ev.y[0].size() == 50);
  CHECK(ev.records[0].j > 0.0);
}

TEST_CASE("evaluation carries each loop state into the next window") {
  SimLoop loop{make_controller(2, 0.002), {10.0, 1.4}, {600.0, 150.0}};
  std::vector<SimLoop*> loops{&loop};
  const SelectorConfig cfg;
  const DisturbanceProfile d = canonical_profile();
  const HorizonEvaluation first = evaluate_horizon(loops, {}, {10.0, 1.4}, d, {0, 0, 100}, cfg);
  const PlantState end = loop.x;
  const HorizonEvaluation second = evaluate_horizon(loops, {}, {10.0, 1.4}, d, {1, 100, 100}, cfg);
  CHECK(second.y[0].front().v == end.v);
  CHECK(second.y[0].front().rho == end.rho);
  CHECK(second.records[0].horizon == 1);
  CHECK(first.records[0].j >= 0.0);
}

TEST_CASE("scenario validation") {
  PlatformScenario sc;
  CHECK_NOTHROW(sc.validate());
  CHECK(sc.samples() == 3000);
  PlatformScenario bad = sc;
  bad.duration = 6.0011;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = sc;
  bad.controllers = {0, 9};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = sc;
  bad.controllers = {1, 1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = sc;
  bad.controllers.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = sc;
  bad.duration = 7.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = sc;
  bad.faults = {{1.0, 1.0}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = sc;
  bad.selector.bandwidth = 400.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("a PI-only platform is the standalone PI loop") {
  PlatformScenario sc = short_run(1.5);
  sc.controllers = {0};
  const PlatformTrace platform = run_platform(sc);
  const PlatformTrace alone = run_closed_loop(0, sc);
  REQUIRE(platform.failure.empty());
  REQUIRE(platform.samples.size() == alone.samples.size());
  for (std::size_t k = 0; k < alone.samples.size(); ++k) {
    CHECK(platform.samples[k].u_applied.q_i == alone.samples[k].u_applied.q_i);
    CHECK(platform.samples[k].y.rho == alone.samples[k].y.rho);
    CHECK(platform.samples[k].active_id == 0);
  }
  CHECK(platform.switches.empty());
}

TEST_CASE("platform trace invariants") {
  PlatformScenario sc = short_run(2.0);
  const PlatformTrace trace = run_platform(sc);
  REQUIRE(trace.failure.empty());
  REQUIRE(trace.samples.size() == 1000);
  CHECK(trace.horizons.size() == 4);
  const PlantLimits limits;
  int active = kLocalPi;
  std::size_t next_switch = 0;
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    const TraceSample& s = trace.samples[k];
    CHECK(s.u_applied.q_i >= limits.q_i_min);
    CHECK(s.u_applied.q_i <= limits.q_i_max);
    CHECK(s.u_applied.q_w >= limits.q_w_min);
    CHECK(s.u_applied.q_w <= limits.q_w_max);
    CHECK(s.y.v > 0.0);
    CHECK(s.y.rho > 0.0);
    if (k > 0) {
      CHECK(std::abs(s.u_applied.q_i - trace.samples[k - 1].u_applied.q_i) <= 100.0);
      CHECK(std::abs(s.u_applied.q_w - trace.samples[k - 1].u_applied.q_w) <= 100.0);
    }
    if (s.active_id != active) {
      REQUIRE(next_switch < trace.switches.size());
      CHECK(trace.switches[next_switch].sample == static_cast<int>(k));
      CHECK(k % sc.selector.horizon_samples() == 0);  // no faults configured
      ++next_switch;
      active = s.active_id;
    }
  }
  CHECK(next_switch == trace.switches.size());
  for (const HorizonReport& h : trace.horizons) {
    for (const EvaluationRecord& r : h.records) CHECK(r.j >= 0.0);
  }
}

TEST_CASE("faults hand the plant to the local controller at once") {
  PlatformScenario sc = short_run(2.0);
  sc.faults = {{0.9, 1.3}};
  const PlatformTrace trace = run_platform(sc);
  REQUIRE(trace.failure.empty());
  REQUIRE(trace.samples[449].active_id != kLocalPi);  // selector had switched away
  for (const TraceSample& s : trace.samples) {
    if (s.t >= 0.9 && s.t < 1.3) CHECK(s.active_id == kLocalPi);
  }
  bool fault_switch = false;
  for (const SwitchEvent& e : trace.switches) {
    if (e.reason == SwitchReason::kFault) {
      fault_switch = true;
      CHECK(e.sample == 450);
      CHECK(e.to == kLocalPi);
    }
  }
  CHECK(fault_switch);
}

TEST_CASE("platform runs are deterministic") {
  const PlatformScenario sc = short_run(1.0);
  const PlatformTrace a = run_platform(sc);
  const PlatformTrace b = run_platform(sc);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    CHECK(a.samples[k].u_applied.q_i == b.samples[k].u_applied.q_i);
    CHECK(a.samples[k].u_applied.q_w == b.samples[k].u_applied.q_w);
    CHECK(a.samples[k].y.v == b.samples[k].y.v);
  }
}

TEST_CASE("PI scores worst in the first horizon") {
  const PlatformTrace trace = run_platform(short_run(1.0));
  REQUIRE_FALSE(trace.horizons.empty());
  const auto& records = trace.horizons.front().records;
  double pi = 0.0, best_other = 1e300;
  for (const EvaluationRecord& r : records) {
    if (r.controller_id == kLocalPi) pi = r.j;
    else best_other = std::min(best_other, r.j);
  }
  CHECK(pi > best_other);
}

TEST_CASE("weighted SSE") {
  PlatformTrace t;
  t.samples.push_back({0.0, {10.0, 1.4}, {9.0, 1.3}, {}, {}, 1.5, 0});
  t.samples.push_back({0.002, {10.0, 1.4}, {10.0, 1.5}, {}, {}, 1.5, 0});
  const SseSummary s = t.sse({1e-3, 1.0});
  CHECK(s.sse_v == doctest::Approx(1.0));
  CHECK(s.sse_rho == doctest::Approx(0.02));
  CHECK(s.sse_total == doctest::Approx(0.021));
}
