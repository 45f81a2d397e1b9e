#pragma once

// Offset-free state estimation: the discrete plant model augmented with one
// integrating input-disturbance state per input,
//   [x; v](k+1) = [[Phi, Gamma], [0, I]] [x; v](k) + [Gamma; 0] u(k) + [0; I] w(k)
//   y(k)        = [C 0] [x; v](k) + n(k),
// with a steady-state Kalman gain.  Everything here is in deviation
// variables around the operating point.

#include "surge/numerics.hpp"
#include "surge/plant.hpp"

namespace surge {

struct AugmentedModel {
  Matrix phi;    // 4x4
  Matrix gamma;  // 4x2
  Matrix c;      // 2x4
  Matrix noise_input;  // 4x2, [0; I]
};

AugmentedModel augment(const LinearModel& model);

struct ObserverState {
  Vector predicted;  // x~*(k), augmented
  Vector corrected;  // x~(k), augmented
  Matrix gain;       // L, 4x2

  Vector x_hat() const { return corrected.head(2); }
  Vector v_hat() const { return corrected.tail(2); }
};

/// Corrector then predictor:
///   x~(k)    = x~*(k) + L (y_m(k) - C~ x~*(k))
///   x~*(k+1) = Phi~ x~(k) + Gamma~ u(k)
ObserverState observer_update(const AugmentedModel& model, ObserverState obs,
                              const Vector& y_measured, const Vector& u_used);

/// Observer in absolute units, wrapping the deviation-variable recursion.
class DisturbanceObserver {
 public:
  /// Qw = I and Rn = 1e-5 I by default.
  DisturbanceObserver(const LinearModel& model, const OperatingPoint& op);
  DisturbanceObserver(const LinearModel& model, const OperatingPoint& op,
                      const Matrix& qw, const Matrix& rn);

  bool initialized() const { return initialized_; }
  /// Starts from the measured state with zero disturbance estimates.
  void initialize(const PlantState& y);
  void correct(const PlantState& y);
  void predict(const ControlInput& u_used);

  PlantState state_estimate() const;
  /// Input-disturbance estimates in m^3/h, added to (q_i, q_w).
  Eigen::Vector2d disturbance_estimate() const;
  const ObserverState& state() const { return state_; }
  const AugmentedModel& model() const { return model_; }

 private:
  AugmentedModel model_;
  OperatingPoint op_;
  ObserverState state_;
  bool initialized_ = false;
};

}  // namespace surge
