#include "surge/scenario.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace surge {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(int line, const std::string& message) {
  throw ScenarioError("line " + std::to_string(line) + ": " + message);
}

double parse_double(const std::string& text, int line) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(value)) {
    fail(line, "expected a number, got '" + text + "'");
  }
  return value;
}

std::vector<double> parse_list(const std::string& text, int line) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_double(trim(item), line));
  return out;
}

std::vector<double> parse_list(const std::string& text, int line, std::size_t n) {
  std::vector<double> out = parse_list(text, line);
  if (out.size() != n) {
    fail(line, "expected " + std::to_string(n) + " comma-separated values");
  }
  return out;
}

int parse_id(const std::string& text, int line) {
  const double v = parse_double(text, line);
  if (v != std::floor(v) || v < 0 || v > 1000) fail(line, "bad controller id '" + text + "'");
  return static_cast<int>(v);
}

}  // namespace

void Scenario::load_profile() {
  const double duration = platform.duration;
  switch (profile_source) {
    case ProfileSource::kCanonical:
      platform.disturbance = canonical_profile();
      break;
    case ProfileSource::kRandom:
      platform.disturbance = random_profile(seed, duration, random_low, random_high);
      break;
    case ProfileSource::kFile: {
      std::ifstream in(profile_file);
      if (!in) throw ScenarioError("cannot open profile '" + profile_file.string() + "'");
      try {
        platform.disturbance = read_profile_csv(in, duration);
      } catch (const PlantError& e) {
        throw ScenarioError(profile_file.string() + ": " + e.what());
      }
      break;
    }
  }
}

Scenario parse_scenario(std::istream& in, const std::filesystem::path& base_dir) {
  Scenario sc;
  PlatformScenario& p = sc.platform;
  std::string section;
  std::set<std::string> seen;
  bool controllers_given = false;

  using Setter = std::function<void(const std::string&, int)>;
  auto number = [](double& target) -> Setter {
    return [&target](const std::string& v, int line) { target = parse_double(v, line); };
  };
  const std::map<std::string, Setter> setters = {
      {"duration_hours", number(p.duration)},
      {"dt_hours", number(p.dt)},
      {"output_dir", [&](const std::string& v, int) { sc.output_dir = v; }},
      {"reference_v", number(p.reference.v)},
      {"reference_rho", number(p.reference.rho)},
      {"plant.v0", number(p.x0.v)},
      {"plant.rho0", number(p.x0.rho)},
      {"plant.q_i0", number(p.u0.q_i)},
      {"plant.q_w0", number(p.u0.q_w)},
      {"plant.q_o", number(p.q_o)},
      {"plant.q_i_gain", number(p.uncertainty.q_i_gain)},
      {"plant.q_w_gain", number(p.uncertainty.q_w_gain)},
      {"selector.horizon_hours", number(p.selector.horizon)},
      {"selector.bandwidth", number(p.selector.bandwidth)},
      {"selector.we",
       [&](const std::string& v, int line) {
         const auto w = parse_list(v, line, 2);
         p.selector.we = {w[0], w[1]};
       }},
      {"selector.wu",
       [&](const std::string& v, int line) {
         const auto w = parse_list(v, line, 2);
         p.selector.wu = {w[0], w[1]};
       }},
      {"selector.index",
       [&](const std::string& v, int line) {
         if (v == "error") {
           p.selector.kind = IndexKind::kErrorOnly;
         } else if (v == "error_plus_move") {
           p.selector.kind = IndexKind::kErrorPlusMove;
         } else {
           fail(line, "index must be 'error' or 'error_plus_move'");
         }
       }},
      {"controllers.enabled",
       [&](const std::string& v, int line) {
         p.controllers.clear();
         std::stringstream items(v);
         std::string item;
         while (std::getline(items, item, ',')) p.controllers.push_back(parse_id(trim(item), line));
         controllers_given = true;
       }},
      {"disturbance.profile",
       [&](const std::string& v, int line) {
         if (v == "canonical") {
           sc.profile_source = ProfileSource::kCanonical;
         } else if (v == "random") {
           sc.profile_source = ProfileSource::kRandom;
         } else if (v == "file") {
           sc.profile_source = ProfileSource::kFile;
         } else {
           fail(line, "profile must be 'canonical', 'random' or 'file'");
         }
       }},
      {"disturbance.file",
       [&](const std::string& v, int) {
         const std::filesystem::path path(v);
         sc.profile_file = path.is_absolute() ? path : base_dir / path;
       }},
      {"disturbance.seed",
       [&](const std::string& v, int line) {
         const double s = parse_double(v, line);
         if (s < 0 || s != std::floor(s) || s > 9.0e15) fail(line, "seed must be a nonnegative integer");
         sc.seed = static_cast<std::uint64_t>(s);
       }},
      {"disturbance.low", number(sc.random_low)},
      {"disturbance.high", number(sc.random_high)},
  };

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') fail(line, "unterminated section header");
      section = trim(text.substr(1, text.size() - 2));
      if (section != "plant" && section != "selector" && section != "controllers" &&
          section != "disturbance" && section != "faults") {
        fail(line, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (value.empty()) fail(line, "missing value for '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (full == "faults.interval") {
      const auto v = parse_list(value, line, 2);
      if (!(v[1] > v[0]) || v[0] < 0) fail(line, "fault interval needs 0 <= start < end");
      p.faults.push_back({v[0], v[1]});
      continue;
    }
    const auto it = setters.find(full);
    if (it == setters.end()) fail(line, "unknown key '" + full + "'");
    if (!seen.insert(full).second) fail(line, "duplicate key '" + full + "'");
    it->second(value, line);
  }

  if (controllers_given && p.controllers.empty()) {
    throw ScenarioError("controllers: empty list");
  }
  if (sc.profile_source == ProfileSource::kFile && sc.profile_file.empty()) {
    throw ScenarioError("disturbance: profile = file needs a 'file' key");
  }
  if (sc.profile_source == ProfileSource::kRandom && !(sc.random_high > sc.random_low)) {
    throw ScenarioError("disturbance: random profile needs low < high");
  }
  if (!(p.dt > 0.0)) throw ScenarioError("dt_hours must be positive");
  p.selector.dt = p.dt;
  sc.load_profile();
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ScenarioError(e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario '" + path.string() + "'");
  try {
    return parse_scenario(in, path.parent_path());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

}  // namespace surge
