#pragma once

// The selector: every registered controller runs in its own closed loop on
// an uncertainty-free nonlinear tank model over each evaluation horizon;
// at the horizon end the best score takes over the real plant with a
// bumpless transfer.  The plant-resident PI (id 0) is the fallback.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "surge/controllers.hpp"
#include "surge/plant.hpp"

namespace surge {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class IndexKind { kErrorOnly, kErrorPlusMove };

struct SelectorConfig {
  double horizon = 0.5;  // N_e, hours
  Eigen::Vector2d we{1e-3, 1.0};
  Eigen::Vector2d wu{0.0, 0.0};
  IndexKind kind = IndexKind::kErrorOnly;
  double dt = 0.002;
  double bandwidth = 100.0;  // rad/hour

  int horizon_samples() const;
};

/// Rejects sample times outside 0.2 <= w_B dt <= 0.6 and horizons shorter
/// than ten closed-loop time constants (10 / w_B).
void validate_switching_config(const SelectorConfig& cfg);

/// sum (r - y)' We (r - y) [+ sum du' Wu du].  `u_before` is the input
/// preceding the window; without it the first move is not counted.
double performance_index(const std::vector<Reference>& r,
                         const std::vector<PlantState>& y,
                         const std::vector<ControlInput>& u,
                         const SelectorConfig& cfg,
                         std::optional<ControlInput> u_before = std::nullopt);

struct Enforcement {
  ControlInput applied;
  bool clamped = false;
};

/// Box first, then the per-sample rate limit around u_prev.
Enforcement enforce_constraints(const ControlInput& u_commanded,
                                const ControlInput& u_applied_prev,
                                const PlantLimits& limits = {});

struct EvaluationRecord {
  int controller_id = 0;
  double j = 0.0;
  bool flagged = false;
  int horizon = 0;
};

/// Returns the unflagged argmin, keeping the incumbent on an exact tie; the
/// local controller when every record is flagged.
int select(const std::vector<EvaluationRecord>& records, int incumbent);

/// One controller's closed loop on the evaluation model.  Its state carries
/// over from one horizon to the next.
struct SimLoop {
  std::unique_ptr<Controller> controller;
  PlantState x;
  ControlInput u_prev;
};

struct EvaluationModel {
  OperatingPoint op = OperatingPoint::canonical();  // q_o is taken from here
  PlantLimits limits;
};

struct HorizonWindow {
  int index = 0;
  int first_sample = 0;
  int samples = 0;
};

struct HorizonEvaluation {
  std::vector<EvaluationRecord> records;
  std::vector<std::vector<PlantState>> y;
  std::vector<std::vector<ControlInput>> u;
};

/// Runs every loop through the window with the actual reference and the
/// measured feed density.  Box or rate clamping, or a throwing controller,
/// flags that loop for this horizon.
HorizonEvaluation evaluate_horizon(std::vector<SimLoop*>& loops,
                                   const EvaluationModel& model,
                                   const Reference& reference,
                                   const DisturbanceProfile& disturbance,
                                   const HorizonWindow& window,
                                   const SelectorConfig& cfg);

struct FaultInterval {
  double start = 0.0;  // hours, inclusive
  double end = 0.0;    // hours, exclusive
};

struct PlatformScenario {
  double duration = 6.0;
  double dt = 0.002;
  PlantState x0;
  ControlInput u0;
  double q_o = 750.0;
  ActuatorUncertainty uncertainty{1.0, 1.1};
  PlantLimits limits;
  Reference reference{10.0, 1.4};
  DisturbanceProfile disturbance = canonical_profile();
  SelectorConfig selector;
  std::vector<int> controllers{0, 1, 2, 3};
  std::vector<FaultInterval> faults;

  int samples() const;
  /// Throws ConfigError on inconsistent durations, ids or profiles.
  void validate() const;
};

struct TraceSample {
  double t = 0.0;
  Reference r;
  PlantState y;
  ControlInput u_commanded;
  ControlInput u_applied;
  double rho_i = 0.0;
  int active_id = 0;
};

enum class SwitchReason { kEvaluation, kFault, kControllerFailure };

struct SwitchEvent {
  int sample = 0;
  double t = 0.0;
  int from = 0;
  int to = 0;
  SwitchReason reason = SwitchReason::kEvaluation;
  /// |u_commanded(k) - u_applied(k-1)| per channel at the switch sample.
  Eigen::Vector2d bump = Eigen::Vector2d::Zero();
};

struct HorizonReport {
  HorizonWindow window;
  std::vector<EvaluationRecord> records;
  int active_during = 0;  // controller on the plant at the window start
  int selected = 0;       // chosen at the window end
};

struct SseSummary {
  double sse_v = 0.0;
  double sse_rho = 0.0;
  double sse_total = 0.0;  // We-weighted
};

struct PlatformTrace {
  std::vector<TraceSample> samples;
  std::vector<HorizonReport> horizons;
  std::vector<SwitchEvent> switches;
  Eigen::Vector2d max_rate = Eigen::Vector2d::Zero();  // applied, per channel
  int output_excursions = 0;  // samples outside the output box
  std::string failure;        // non-empty when the run stopped early

  SseSummary sse(const Eigen::Vector2d& we) const;
};

/// Full platform run starting on the local controller.
PlatformTrace run_platform(const PlatformScenario& scenario);

/// A single controller on the plant for the whole run, no selector.
PlatformTrace run_closed_loop(int controller_id, const PlatformScenario& scenario);

}  // namespace surge
