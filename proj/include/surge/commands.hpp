#pragma once

// Command implementations behind the `surge` executable.  Each command
// renders every output in memory first and only then writes the files, so a
// failing run leaves nothing behind.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "surge/analysis.hpp"
#include "surge/platform.hpp"
#include "surge/scenario.hpp"

namespace surge {

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `--out` wins, then $SURGE_OUT_DIR, then the fallback.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                         const std::string& fallback);

void write_trace_csv(std::ostream& out, const PlatformTrace& trace);
void write_horizon_csv(std::ostream& out, const PlatformTrace& trace,
                       const std::vector<int>& controller_ids);

struct StandaloneResult {
  int controller_id = 0;
  SseSummary sse;
};

struct SimulationResult {
  PlatformTrace trace;
  SseSummary platform_sse;
  std::vector<StandaloneResult> standalone;
};

/// Runs the platform and every enabled controller on its own, then writes
/// trace.csv, horizons.csv and summary.txt into `out_dir`.
SimulationResult cmd_simulate(const Scenario& scenario,
                              const std::filesystem::path& out_dir,
                              std::ostream& log);

struct StepStudyOptions {
  int controller = 0;
  double step = 0.1;          // change in rho_i, t/m3
  double q_w_gain = 1.1;      // actuator gain on q_w
  double settle_hours = 0.5;  // run before the step
  double after_hours = 1.5;   // run after the step
  double band = 0.005;        // density settling band, t/m3
  double dt = 0.002;
};

struct StepStudyResult {
  PlatformTrace trace;
  double step_time = 0.0;
  /// Hours from the step until rho stays within the band; 0 if it never
  /// leaves it.
  double settling_time = 0.0;
  double final_error_v = 0.0;    // r - y at the last sample
  double final_error_rho = 0.0;
};

StepStudyResult run_step_study(const StepStudyOptions& options);

/// Writes step_<id>.csv and step_<id>_summary.txt into `out_dir`.
StepStudyResult cmd_step_study(const StepStudyOptions& options,
                               const std::filesystem::path& out_dir, std::ostream& log);

/// Writes report.txt, sweep_g.csv and sweep_gd.csv and prints the report.
ControllabilityReport cmd_analyze(const std::optional<std::filesystem::path>& model_file,
                                  const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace surge
