#include "surge/observer.hpp"

namespace surge {

AugmentedModel augment(const LinearModel& model) {
  const Eigen::Index n = model.phi.rows();
  const Eigen::Index m = model.gamma.cols();
  const Eigen::Index p = model.c.rows();
  AugmentedModel aug;
  aug.phi = Matrix::Zero(n + m, n + m);
  aug.phi.topLeftCorner(n, n) = model.phi;
  aug.phi.topRightCorner(n, m) = model.gamma;
  aug.phi.bottomRightCorner(m, m) = Matrix::Identity(m, m);
  aug.gamma = Matrix::Zero(n + m, m);
  aug.gamma.topRows(n) = model.gamma;
  aug.c = Matrix::Zero(p, n + m);
  aug.c.leftCols(n) = model.c;
  aug.noise_input = Matrix::Zero(n + m, m);
  aug.noise_input.bottomRows(m) = Matrix::Identity(m, m);
  return aug;
}

ObserverState observer_update(const AugmentedModel& model, ObserverState obs,
                              const Vector& y_measured, const Vector& u_used) {
  obs.corrected =
      obs.predicted + obs.gain * (y_measured - model.c * obs.predicted);
  obs.predicted = model.phi * obs.corrected + model.gamma * u_used;
  return obs;
}

DisturbanceObserver::DisturbanceObserver(const LinearModel& model,
                                         const OperatingPoint& op)
    : DisturbanceObserver(model, op, Matrix::Identity(2, 2),
                          1e-5 * Matrix::Identity(2, 2)) {}

DisturbanceObserver::DisturbanceObserver(const LinearModel& model,
                                         const OperatingPoint& op,
                                         const Matrix& qw, const Matrix& rn)
    : model_(augment(model)), op_(op) {
  state_.gain = kalman_gain(model_.phi, model_.c, qw, rn, model_.noise_input);
  state_.predicted = Vector::Zero(model_.phi.rows());
  state_.corrected = state_.predicted;
}

void DisturbanceObserver::initialize(const PlantState& y) {
  state_.predicted.setZero();
  state_.predicted(0) = y.v - op_.state.v;
  state_.predicted(1) = y.rho - op_.state.rho;
  state_.corrected = state_.predicted;
  initialized_ = true;
}

void DisturbanceObserver::correct(const PlantState& y) {
  const Eigen::Vector2d measured{y.v - op_.state.v, y.rho - op_.state.rho};
  state_.corrected =
      state_.predicted +
      state_.gain * (measured - model_.c * state_.predicted);
}

void DisturbanceObserver::predict(const ControlInput& u_used) {
  const Eigen::Vector2d u{u_used.q_i - op_.input.q_i,
                          u_used.q_w - op_.input.q_w};
  state_.predicted = model_.phi * state_.corrected + model_.gamma * u;
}

PlantState DisturbanceObserver::state_estimate() const {
  return {op_.state.v + state_.corrected(0), op_.state.rho + state_.corrected(1)};
}

Eigen::Vector2d DisturbanceObserver::disturbance_estimate() const {
  return state_.corrected.tail(2);
}

}  // namespace surge
