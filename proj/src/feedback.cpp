#include "surge/controllers.hpp"

#include <algorithm>

namespace surge {

PiParameters pi_from_rules(const TuningModel& model, double tuning_factor) {
  if (!(tuning_factor > 0.0)) {
    throw ControllerError("pi_from_rules: T_R must be positive");
  }
  return std::visit(
      [tuning_factor](const auto& m) -> PiParameters {
        if (m.k == 0.0) {
          throw ControllerError("pi_from_rules: process gain k is zero");
        }
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FirstOrderModel>) {
          return {3.0 * m.tau / (m.k * tuning_factor), m.tau};
        } else {
          return {4.2 / (m.k * tuning_factor), 0.4 * tuning_factor};
        }
      },
      model);
}

LinearFeedbackController::LinearFeedbackController(Matrix phi, Matrix gamma,
                                                   Matrix c, Matrix d,
                                                   ControlInput nominal,
                                                   PlantLimits limits)
    : phi_(std::move(phi)),
      gamma_(std::move(gamma)),
      c_(std::move(c)),
      d_(std::move(d)),
      nominal_(nominal),
      limits_(limits) {
  const Eigen::Index n = phi_.rows();
  if (phi_.cols() != n || gamma_.rows() != n || gamma_.cols() != 2 ||
      c_.rows() != 2 || c_.cols() != n || d_.rows() != 2 || d_.cols() != 2) {
    throw ControllerError("LinearFeedbackController: dimension mismatch");
  }
  c_pinv_ = pseudoinverse(c_);
  state_ = Vector::Zero(n);
}

LinearFeedbackController LinearFeedbackController::from_continuous(
    const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d,
    double dt, ControlInput nominal, PlantLimits limits) {
  const DiscretePair pair = discretize_zoh(a, b, dt);
  return {pair.phi, pair.gamma, c, d, nominal, limits};
}

ControlInput LinearFeedbackController::output(const Eigen::Vector2d& error) const {
  const Eigen::Vector2d deviation = c_ * state_ + d_ * error;
  return {nominal_.q_i + deviation(0), nominal_.q_w + deviation(1)};
}

FeedbackStep LinearFeedbackController::compute_control(
    const Eigen::Vector2d& error) {
  FeedbackStep result{output(error), false};
  ControlInput& u = result.command;
  if (u.q_i > product_cap_) {
    u = {product_cap_, 0.0};
    result.saturated = true;
  } else {
    const ControlInput raw = u;
    u.q_i = std::clamp(u.q_i, limits_.q_i_min, limits_.q_i_max);
    u.q_w = std::clamp(u.q_w, limits_.q_w_min, limits_.q_w_max);
    result.saturated = raw.q_i != u.q_i || raw.q_w != u.q_w;
  }
  if (result.saturated) {
    state_ = phi_ * state_;
  } else {
    state_ = phi_ * state_ + gamma_ * error;
  }
  return result;
}

void LinearFeedbackController::back_initialize(const ControlInput& u_applied_prev,
                                               const Eigen::Vector2d& error) {
  const Eigen::Vector2d target{u_applied_prev.q_i - nominal_.q_i,
                               u_applied_prev.q_w - nominal_.q_w};
  state_ = c_pinv_ * (target - d_ * error);
}

LinearFeedbackController realize_pi_matrix(const Matrix& proportional,
                                           const Matrix& integral, double dt,
                                           ControlInput nominal,
                                           PlantLimits limits) {
  if (proportional.rows() != 2 || proportional.cols() != 2 ||
      integral.rows() != 2 || integral.cols() != 2) {
    throw ControllerError("realize_pi_matrix: gains must be 2x2");
  }
  return LinearFeedbackController::from_continuous(
      Matrix::Zero(2, 2), Matrix::Identity(2, 2), integral, proportional, dt,
      nominal, limits);
}

RationalTransferMatrix derive_inverse_controller(const RationalTransferMatrix& gp,
                                                 double k) {
  if (gp.rows() != gp.cols()) {
    throw ControllerError("derive_inverse_controller: plant is not square");
  }
  RationalTransferMatrix inverse;
  try {
    inverse = gp.inverse();
  } catch (const RationalError& e) {
    throw ControllerError(std::string("derive_inverse_controller: ") + e.what());
  }
  const Rational integrator(Polynomial{k}, Polynomial{0.0, 1.0});
  return (integrator * inverse).simplified();
}

RationalTransferMatrix plant_transfer_matrix(const LinearModel& model) {
  return RationalTransferMatrix::from_state_space(model.a, model.b, model.c);
}

FeedbackController::FeedbackController(int id, std::string name,
                                       LinearFeedbackController law)
    : id_(id), name_(std::move(name)), law_(std::move(law)) {}

ControlInput FeedbackController::step(const ControllerIO& io) {
  const FeedbackStep s = law_.compute_control(tracking_error(io));
  last_saturated_ = s.saturated;
  return s.command;
}

void FeedbackController::back_initialize(const ControllerIO& io) {
  law_.back_initialize(io.u_applied_prev, tracking_error(io));
}

}  // namespace surge
