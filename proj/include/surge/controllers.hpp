#pragma once

// Common controller interface and the conventional (linear feedback)
// controllers: decoupled PI and the modified inverse controller.

#include <memory>
#include <string>
#include <variant>

#include "surge/numerics.hpp"
#include "surge/plant.hpp"
#include "surge/rational.hpp"

namespace surge {

class ControllerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Setpoints for (v, rho).
using Reference = PlantState;

/// What a controller sees each sample.  The feed density is deliberately
/// absent: it is never made available to the controllers.
struct ControllerIO {
  Reference r;
  PlantState y;
  ControlInput u_applied_prev;
  double dt = 0.002;
};

/// Registry ids.
enum ControllerId : int {
  kLocalPi = 0,
  kModifiedInverse = 1,
  kLinearMpc = 2,
  kNonlinearMpc = 3,
};

class Controller {
 public:
  virtual ~Controller() = default;

  virtual int id() const = 0;
  virtual std::string name() const = 0;

  /// Command for the current sample.  Called only while this instance drives
  /// a loop.
  virtual ControlInput step(const ControllerIO& io) = 0;

  /// Follows the loop signals without producing a command (keeps estimators
  /// converged while another controller is in charge).
  virtual void track(const ControllerIO& /*io*/) {}

  /// Prepares the instance to take over a running loop so that its first
  /// command does not bump the applied input.
  virtual void back_initialize(const ControllerIO& io) = 0;

  virtual void reset() = 0;
};

// ---------------------------------------------------------------------------
// PI tuning rules.

struct FirstOrderModel {
  double k = 1.0;
  double tau = 1.0;
};

struct IntegratorModel {
  double k = 1.0;
};

using TuningModel = std::variant<FirstOrderModel, IntegratorModel>;

struct PiParameters {
  double kc = 0.0;
  double tau_i = 0.0;

  double integral_gain() const { return kc / tau_i; }
};

/// First order: Kc = 3 tau / (k T_R), tau_i = tau.
/// Integrator:  Kc = 4.2 / (k T_R),   tau_i = 0.4 T_R.
PiParameters pi_from_rules(const TuningModel& model, double tuning_factor);

// ---------------------------------------------------------------------------
// Discrete linear feedback controller
//   x(k+1) = Phi x(k) + Gamma e(k),  u(k) = u* + C x(k) + D e(k)
// with e = r - y and u* the nominal input.

struct FeedbackStep {
  ControlInput command;
  bool saturated = false;
};

class LinearFeedbackController {
 public:
  LinearFeedbackController(Matrix phi, Matrix gamma, Matrix c, Matrix d,
                           ControlInput nominal = {},
                           PlantLimits limits = {});

  /// ZOH-discretizes a continuous realization (A, B, C, D).
  static LinearFeedbackController from_continuous(
      const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d,
      double dt, ControlInput nominal = {}, PlantLimits limits = {});

  /// Output for the current state without advancing it.
  ControlInput output(const Eigen::Vector2d& error) const;

  /// One sample of the control law.  Saturation: a product command above
  /// the outflow (750) becomes (750, 0); any other out-of-box command is
  /// clamped.  Either way the integrators are frozen for the sample.
  FeedbackStep compute_control(const Eigen::Vector2d& error);

  /// x = C^+ (u_prev - u* - D e) so that output(e) reproduces u_prev.
  void back_initialize(const ControlInput& u_applied_prev,
                       const Eigen::Vector2d& error);

  void reset() { state_.setZero(); }

  const Vector& state() const { return state_; }
  void set_state(const Vector& x) { state_ = x; }
  const Matrix& phi() const { return phi_; }
  const Matrix& gamma() const { return gamma_; }
  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }

 private:
  Matrix phi_, gamma_, c_, d_;
  Matrix c_pinv_;
  Vector state_;
  ControlInput nominal_;
  PlantLimits limits_;
  double product_cap_ = 750.0;
};

/// Two-integrator realization of D_c + K_i / s: A = 0, B = I, C = K_i, D = D_c,
/// discretized with sample time dt (Phi = I, Gamma = dt I).
LinearFeedbackController realize_pi_matrix(const Matrix& proportional,
                                           const Matrix& integral, double dt,
                                           ControlInput nominal = {},
                                           PlantLimits limits = {});

/// Ideal controller (k/s) Gp^-1 giving the loop L = (k/s) I.
RationalTransferMatrix derive_inverse_controller(const RationalTransferMatrix& gp,
                                                 double k);

/// The linearized plant as a transfer matrix [[1/s, 1/s], [0.01/(s+75),
/// -0.04/(s+75)]] (from the canonical operating point).
RationalTransferMatrix plant_transfer_matrix(const LinearModel& model);

/// Controller interface over a LinearFeedbackController.
class FeedbackController final : public Controller {
 public:
  FeedbackController(int id, std::string name, LinearFeedbackController law);

  int id() const override { return id_; }
  std::string name() const override { return name_; }
  ControlInput step(const ControllerIO& io) override;
  void back_initialize(const ControllerIO& io) override;
  void reset() override { law_.reset(); }

  const LinearFeedbackController& law() const { return law_; }
  bool last_saturated() const { return last_saturated_; }

 private:
  int id_;
  std::string name_;
  LinearFeedbackController law_;
  bool last_saturated_ = false;
};

inline Eigen::Vector2d tracking_error(const ControllerIO& io) {
  return {io.r.v - io.y.v, io.r.rho - io.y.rho};
}

}  // namespace surge
