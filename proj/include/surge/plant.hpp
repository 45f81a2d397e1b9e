#pragma once

// Surge-tank model: volume v [m^3] and density rho [t/m^3] driven by the
// product feed q_i and water q_w [m^3/h], with the feed density rho_i as the
// disturbance and a constant outflow q_o.  Time is in hours throughout.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surge/numerics.hpp"

namespace surge {

class PlantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlantState {
  double v = 10.0;
  double rho = 1.4;
};

struct ControlInput {
  double q_i = 600.0;
  double q_w = 150.0;
};

struct Disturbance {
  double rho_i = 1.5;
};

inline Eigen::Vector2d to_vector(const PlantState& x) { return {x.v, x.rho}; }
inline Eigen::Vector2d to_vector(const ControlInput& u) { return {u.q_i, u.q_w}; }
inline PlantState to_state(const Eigen::Vector2d& x) { return {x(0), x(1)}; }
inline ControlInput to_input(const Eigen::Vector2d& u) { return {u(0), u(1)}; }

/// Physical box of the tank.
struct PlantLimits {
  double v_min = 3.0, v_max = 20.0;
  double rho_min = 1.0, rho_max = 1.5;
  double q_i_min = 300.0, q_i_max = 1200.0;
  double q_w_min = 0.0, q_w_max = 750.0;
  double rho_i_min = 1.0, rho_i_max = 2.0;
  /// Largest change of either flow between consecutive samples, m^3/h.
  double rate_limit = 100.0;

  Eigen::Vector2d input_min() const { return {q_i_min, q_w_min}; }
  Eigen::Vector2d input_max() const { return {q_i_max, q_w_max}; }
  Eigen::Vector2d output_min() const { return {v_min, rho_min}; }
  Eigen::Vector2d output_max() const { return {v_max, rho_max}; }
  bool output_within(const PlantState& x) const {
    return x.v >= v_min && x.v <= v_max && x.rho >= rho_min && x.rho <= rho_max;
  }
};

struct OperatingPoint {
  PlantState state;
  ControlInput input;
  double q_o = 750.0;
  Disturbance disturbance;

  /// v = 10, rho = 1.4, q_i = 600, q_w = 150, q_o = 750, rho_i = 1.5.
  static OperatingPoint canonical() { return {}; }
};

/// Continuous LTI model x' = A x + B u + Gd d, y = C x in deviation
/// variables, with its ZOH pair for `dt`.
struct LinearModel {
  Matrix a, b, gd, c;
  Matrix phi, gamma;
  double dt = 0.0;
};

struct ActuatorUncertainty {
  double q_i_gain = 1.0;
  double q_w_gain = 1.0;
};

struct DisturbanceKnot {
  double time = 0.0;
  double rho_i = 1.5;
};

/// Piecewise-constant feed density; each knot holds until the next one.
struct DisturbanceProfile {
  std::vector<DisturbanceKnot> knots;
  double duration = 0.0;

  /// Throws PlantError on an empty profile, non-increasing times, a first
  /// knot after t = 0 or values outside the feed-density range.
  void validate(const PlantLimits& limits = {}) const;
};

/// [dv/dt, drho/dt] of the nonlinear tank.
Eigen::Vector2d dynamics(const PlantState& x, const ControlInput& u, double q_o,
                         const Disturbance& d);

Eigen::Vector2d equilibrium_residual(const OperatingPoint& op);

/// Jacobians at an equilibrium (q_o is held fixed, so its column is dropped).
/// Throws PlantError carrying the residual when `op` is not an equilibrium.
LinearModel linearize(const OperatingPoint& op, double dt = 0.002);

/// Advances the tank one RK4 step.  The uncertainty gains scale the
/// commanded flows before they reach the tank.
PlantState step_plant(const PlantState& x, const ControlInput& u_commanded,
                      double q_o, const Disturbance& d,
                      const ActuatorUncertainty& uncertainty, double dt);

ControlInput apply_uncertainty(const ControlInput& u,
                               const ActuatorUncertainty& uncertainty);

Disturbance sample_disturbance(const DisturbanceProfile& profile, double t);

/// Six-hour reference profile: peak 1.74, low 1.35 with the sub-1.4 dip over
/// [2.6, 3.2] h.
DisturbanceProfile canonical_profile();

/// Random step profile: a new level every 0.2-0.5 h, drawn uniformly from
/// [low, high].  Deterministic for a given seed on every platform.
DisturbanceProfile random_profile(std::uint64_t seed, double duration,
                                  double low = 1.35, double high = 1.74);

/// CSV form `time_hours,rho_i` with a header line.  The duration is the
/// caller's; reading sets it to `duration`.
void write_profile_csv(std::ostream& out, const DisturbanceProfile& profile);
DisturbanceProfile read_profile_csv(std::istream& in, double duration);

}  // namespace surge
