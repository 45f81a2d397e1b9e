#pragma once

// Scenario files: `key = value` lines, optional [section] headers, `#`
// comments.  Keys outside a section are global.
//
//   duration_hours, dt_hours, output_dir, reference_v, reference_rho
//   [plant]        v0, rho0, q_i0, q_w0, q_o, q_i_gain, q_w_gain
//   [selector]     horizon_hours, bandwidth, we, wu, index (error | error_plus_move)
//   [controllers]  enabled (comma-separated ids)
//   [disturbance]  profile (canonical | random | file), file, seed, low, high
//   [faults]       interval = start, end   (repeatable, hours)

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "surge/platform.hpp"

namespace surge {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProfileSource { kCanonical, kRandom, kFile };

struct Scenario {
  PlatformScenario platform;
  std::string output_dir = "out";
  ProfileSource profile_source = ProfileSource::kCanonical;
  std::filesystem::path profile_file;  // resolved against the scenario directory
  std::uint64_t seed = 1;
  double random_low = 1.35;
  double random_high = 1.74;

  /// Rebuilds the disturbance profile from its source (after a seed change,
  /// for instance).
  void load_profile();
};

/// Parses and validates.  `base_dir` resolves relative profile paths.
/// Errors carry the line number where one applies.
Scenario parse_scenario(std::istream& in, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace surge
