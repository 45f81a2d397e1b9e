#include "surge/plant.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "surge/format.hpp"

namespace surge {

void DisturbanceProfile::validate(const PlantLimits& limits) const {
  if (knots.empty()) {
    throw PlantError("disturbance profile has no knots");
  }
  if (knots.front().time != 0.0) {
    throw PlantError("disturbance profile must start at t = 0");
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const DisturbanceKnot& k = knots[i];
    if (!std::isfinite(k.time) || !std::isfinite(k.rho_i)) {
      throw PlantError("disturbance profile has a non-finite knot");
    }
    if (k.rho_i < limits.rho_i_min || k.rho_i > limits.rho_i_max) {
      throw PlantError("disturbance knot " + std::to_string(i) +
                       " outside the feed-density range");
    }
    if (i > 0 && !(k.time > knots[i - 1].time)) {
      throw PlantError("disturbance knot times must be strictly increasing");
    }
  }
  if (!(duration > 0.0)) {
    throw PlantError("disturbance profile duration must be positive");
  }
}

Eigen::Vector2d dynamics(const PlantState& x, const ControlInput& u, double q_o,
                         const Disturbance& d) {
  if (!(x.v > 0.0)) {
    throw PlantError("tank volume must stay positive (v = " +
                     std::to_string(x.v) + ")");
  }
  const double inflow = u.q_i + u.q_w;
  return {inflow - q_o,
          (d.rho_i * u.q_i + u.q_w - x.rho * inflow) / x.v};
}

Eigen::Vector2d equilibrium_residual(const OperatingPoint& op) {
  return dynamics(op.state, op.input, op.q_o, op.disturbance);
}

LinearModel linearize(const OperatingPoint& op, double dt) {
  const Eigen::Vector2d residual = equilibrium_residual(op);
  if (residual.norm() >= 1e-9) {
    std::ostringstream msg;
    msg << "linearize: not an equilibrium, residual = (" << residual(0) << ", "
        << residual(1) << ")";
    throw PlantError(msg.str());
  }
  const double v = op.state.v;
  const double rho = op.state.rho;
  const double q_i = op.input.q_i;
  const double q_w = op.input.q_w;
  const double rho_i = op.disturbance.rho_i;

  LinearModel model;
  model.a = Matrix(2, 2);
  model.a << 0.0, 0.0,
      -(rho_i * q_i + q_w - rho * (q_i + q_w)) / (v * v), -(q_i + q_w) / v;
  model.b = Matrix(2, 2);
  model.b << 1.0, 1.0, (rho_i - rho) / v, (1.0 - rho) / v;
  model.gd = Matrix(2, 1);
  model.gd << 0.0, q_i / v;
  model.c = Matrix::Identity(2, 2);
  const DiscretePair pair = discretize_zoh(model.a, model.b, dt);
  model.phi = pair.phi;
  model.gamma = pair.gamma;
  model.dt = dt;
  return model;
}

ControlInput apply_uncertainty(const ControlInput& u,
                               const ActuatorUncertainty& uncertainty) {
  return {u.q_i * uncertainty.q_i_gain, u.q_w * uncertainty.q_w_gain};
}

PlantState step_plant(const PlantState& x, const ControlInput& u_commanded,
                      double q_o, const Disturbance& d,
                      const ActuatorUncertainty& uncertainty, double dt) {
  if (!(dt > 0.0)) {
    throw PlantError("step_plant: dt must be positive");
  }
  const ControlInput applied = apply_uncertainty(u_commanded, uncertainty);
  const VectorField field = [&](const Vector& s) -> Vector {
    return dynamics(PlantState{s(0), s(1)}, applied, q_o, d);
  };
  Vector start(2);
  start << x.v, x.rho;
  const Vector next = rk4_step(field, start, dt);
  return {next(0), next(1)};
}

Disturbance sample_disturbance(const DisturbanceProfile& profile, double t) {
  if (profile.knots.empty()) {
    throw PlantError("sample_disturbance: empty profile");
  }
  if (t < 0.0 || t > profile.duration) {
    throw PlantError("sample_disturbance: t = " + std::to_string(t) +
                     " outside [0, " + std::to_string(profile.duration) + "]");
  }
  double value = profile.knots.front().rho_i;
  for (const DisturbanceKnot& knot : profile.knots) {
    if (knot.time > t) {
      break;
    }
    value = knot.rho_i;
  }
  return {value};
}

DisturbanceProfile canonical_profile() {
  DisturbanceProfile profile;
  profile.duration = 6.0;
  profile.knots = {
      {0.0, 1.50}, {0.3, 1.56}, {0.7, 1.62}, {1.0, 1.58}, {1.3, 1.66},
      {1.6, 1.61}, {1.9, 1.57}, {2.2, 1.48}, {2.6, 1.35}, {3.2, 1.45},
      {3.5, 1.52}, {3.9, 1.60}, {4.2, 1.68}, {4.6, 1.74}, {5.0, 1.65},
      {5.4, 1.57}, {5.8, 1.55},
  };
  return profile;
}

DisturbanceProfile random_profile(std::uint64_t seed, double duration,
                                  double low, double high) {
  std::mt19937_64 engine(seed);
  // Distributions are implementation-defined; map the raw words ourselves.
  auto unit = [&engine] {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
  };
  DisturbanceProfile profile;
  profile.duration = duration;
  double t = 0.0;
  while (t < duration) {
    profile.knots.push_back({t, low + (high - low) * unit()});
    t += 0.2 + 0.3 * unit();
    t = std::round(t * 1000.0) / 1000.0;
  }
  return profile;
}

void write_profile_csv(std::ostream& out, const DisturbanceProfile& profile) {
  out << "time_hours,rho_i\n";
  for (const DisturbanceKnot& k : profile.knots) {
    out << format_number(k.time) << ',' << format_number(k.rho_i) << '\n';
  }
}

DisturbanceProfile read_profile_csv(std::istream& in, double duration) {
  DisturbanceProfile profile;
  profile.duration = duration;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (line.rfind("time_hours", 0) == 0) {
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw PlantError("profile CSV line " + std::to_string(line_number) +
                       ": expected `time_hours,rho_i`");
    }
    try {
      std::size_t used = 0;
      const std::string first = line.substr(0, comma);
      const std::string second = line.substr(comma + 1);
      const double time = std::stod(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
      const double value = std::stod(second, &used);
      if (used != second.size()) throw std::invalid_argument(second);
      profile.knots.push_back({time, value});
    } catch (const std::logic_error&) {
      throw PlantError("profile CSV line " + std::to_string(line_number) +
                       ": malformed number");
    }
  }
  profile.validate();
  return profile;
}

}  // namespace surge
