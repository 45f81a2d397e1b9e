#include "surge/registry.hpp"

namespace surge {

LinearFeedbackController make_local_pi(double dt, const OperatingPoint& op) {
  const LinearModel model = linearize(op, dt);
  // Gp(1,1) = b11 / s and Gp(2,2) = b22 / (s - a22).
  const PiParameters volume =
      pi_from_rules(IntegratorModel{model.b(0, 0)}, kPiTuningFactor);
  const double pole = -model.a(1, 1);
  const PiParameters density = pi_from_rules(
      FirstOrderModel{model.b(1, 1) / pole, 1.0 / pole}, kPiTuningFactor);
  Matrix proportional = Matrix::Zero(2, 2);
  proportional(0, 0) = volume.kc;
  proportional(1, 1) = density.kc;
  Matrix integral = Matrix::Zero(2, 2);
  integral(0, 0) = volume.integral_gain();
  integral(1, 1) = density.integral_gain();
  return realize_pi_matrix(proportional, integral, dt, op.input);
}

LinearFeedbackController make_modified_inverse(double dt,
                                               const OperatingPoint& op) {
  Matrix proportional(2, 2);
  proportional << 0.8, 20.0, 0.2, -20.0;
  Matrix integral(2, 2);
  integral << 0.8 * 41.3, 1500.0, 0.2 * 165.0, -1500.0;
  return realize_pi_matrix(kInverseGain * proportional, kInverseGain * integral,
                           dt, op.input);
}

MpcConfig default_mpc_config(ModelKind kind, double dt) {
  MpcConfig cfg;
  cfg.kind = kind;
  cfg.dt = dt;
  return cfg;
}

std::unique_ptr<Controller> make_controller(int id, double dt) {
  switch (id) {
    case kLocalPi:
      return std::make_unique<FeedbackController>(id, controller_name(id),
                                                  make_local_pi(dt));
    case kModifiedInverse:
      return std::make_unique<FeedbackController>(id, controller_name(id),
                                                  make_modified_inverse(dt));
    case kLinearMpc:
      return std::make_unique<MpcController>(
          id, controller_name(id), default_mpc_config(ModelKind::kLinear, dt));
    case kNonlinearMpc:
      return std::make_unique<MpcController>(
          id, controller_name(id), default_mpc_config(ModelKind::kNonlinear, dt));
    default:
      throw ControllerError("unknown controller id " + std::to_string(id));
  }
}

std::string controller_name(int id) {
  switch (id) {
    case kLocalPi: return "decoupled PI (local)";
    case kModifiedInverse: return "modified inverse";
    case kLinearMpc: return "linear MPC";
    case kNonlinearMpc: return "nonlinear MPC";
    default: return "unknown";
  }
}

bool is_known_controller(int id) { return id >= kLocalPi && id <= kNonlinearMpc; }

}  // namespace surge
