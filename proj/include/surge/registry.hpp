#pragma once

#include <memory>
#include <string>

#include "surge/controllers.hpp"
#include "surge/mpc.hpp"

namespace surge {

/// Tuning factor used for the decoupled PI loops.
inline constexpr double kPiTuningFactor = 0.05;
/// Loop gain k of the inverse-based controller.
inline constexpr double kInverseGain = 100.0;

/// Decoupled PI pairing q_i -> v and q_w -> rho, tuned from the diagonal of
/// the linearized plant with the tuning rules.
LinearFeedbackController make_local_pi(double dt,
                                       const OperatingPoint& op = OperatingPoint::canonical());

/// Inverse-based controller k (k/s) Gp^-1 with integral action added to the
/// two proportional (volume-error) elements: 0.8(s + 41.3)/s and
/// 0.2(s + 165)/s, scaled by k = 100.
LinearFeedbackController make_modified_inverse(double dt,
                                               const OperatingPoint& op = OperatingPoint::canonical());

MpcConfig default_mpc_config(ModelKind kind, double dt);

/// Ids 0-3: local PI, modified inverse, linear MPC, nonlinear MPC.
std::unique_ptr<Controller> make_controller(int id, double dt);

std::string controller_name(int id);
bool is_known_controller(int id);

}  // namespace surge
