#pragma once

// Model predictive control with soft output bounds and observer-based
// integral action.  The problem solved each sample is
//
//   min  sum_{j=1..Np} |r - y(k+j)|_Q^2 + sum_{i=0..Nc-1} |du(k+i)|_R^2 + d' Psi d
//   s.t. model rollout with inputs u + v_hat,
//        u_min <= u <= u_max, |du| <= rate per sample,
//        y_min - d <= y <= y_max + d.
//
// The slack d enters with a single element per output, so for a fixed input
// sequence its optimum is the largest bound violation over the horizon.  It
// is eliminated in closed form, leaving a box-constrained problem in the
// inputs that is solved by projected Gauss-Newton.

#include <memory>
#include <optional>
#include <vector>

#include "surge/controllers.hpp"
#include "surge/observer.hpp"

namespace surge {

class MpcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { kLinear, kNonlinear };

struct MpcConfig {
  int np = 50;  // prediction samples
  int nc = 5;   // free moves
  int nb = 1;   // samples each move is held
  Eigen::Vector2d q{1e-3, 1.0};
  Eigen::Vector2d r{0.5e-7, 0.5e-7};
  Eigen::Vector2d psi{1e7, 1e7};
  PlantLimits limits;
  ModelKind kind = ModelKind::kLinear;
  double dt = 0.002;
  int max_iterations = 100;

  /// Throws MpcError unless Np >= Nc * Nb and the weights are nonnegative.
  void validate() const;
};

/// Input sequence prediction.  Outputs are absolute (v, rho) for samples
/// k+1 .. k+Np, stored column-wise.
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;
  virtual Matrix rollout(const PlantState& x0, const Eigen::Vector2d& v_hat,
                         const Vector& moves) const = 0;
  /// d(vec(outputs)) / d(moves), 2Np x 2Nc, outputs stacked [v1 rho1 v2 ...].
  virtual Matrix jacobian(const PlantState& x0, const Eigen::Vector2d& v_hat,
                          const Vector& moves) const = 0;
};

/// Deviation-variable ZOH model x+ = Phi x + Gamma (u - u* + v_hat).
class LinearPrediction final : public PredictionModel {
 public:
  LinearPrediction(const LinearModel& model, const OperatingPoint& op,
                   const MpcConfig& cfg);
  Matrix rollout(const PlantState& x0, const Eigen::Vector2d& v_hat,
                 const Vector& moves) const override;
  Matrix jacobian(const PlantState&, const Eigen::Vector2d&,
                  const Vector&) const override {
    return sensitivity_;
  }

 private:
  LinearModel model_;
  OperatingPoint op_;
  MpcConfig cfg_;
  Matrix sensitivity_;
};

/// Nonlinear tank integrated with one RK4 step per sample, feed density at
/// its nominal value (the controller does not measure it).  The density
/// equation divides by max(v, 1 m^3) so drained predictions stay finite.
/// Jacobians by central differences with a relative step of 1e-6.
class NonlinearPrediction final : public PredictionModel {
 public:
  NonlinearPrediction(const OperatingPoint& op, const MpcConfig& cfg);
  Matrix rollout(const PlantState& x0, const Eigen::Vector2d& v_hat,
                 const Vector& moves) const override;
  Matrix jacobian(const PlantState& x0, const Eigen::Vector2d& v_hat,
                  const Vector& moves) const override;

 private:
  OperatingPoint op_;
  MpcConfig cfg_;
};

std::unique_ptr<PredictionModel> make_prediction_model(const MpcConfig& cfg,
                                                       const OperatingPoint& op);

struct MpcProblem {
  PlantState x0;
  Eigen::Vector2d v_hat = Eigen::Vector2d::Zero();
  Reference reference;
  ControlInput u_prev;
};

struct MpcSolution {
  Vector moves;  // [q_i0, q_w0, q_i1, q_w1, ...]
  Eigen::Vector2d slack = Eigen::Vector2d::Zero();
  double objective = 0.0;
  int iterations = 0;

  ControlInput first() const { return {moves(0), moves(1)}; }
};

/// Per-move bounds: the input box intersected with what the rate limit can
/// reach from u_prev by the sample the move starts.
struct MoveBounds {
  Vector lower;
  Vector upper;
};
MoveBounds move_bounds(const MpcConfig& cfg, const ControlInput& u_prev);

/// Objective with the slack at its optimum for this input sequence.
double mpc_objective(const MpcConfig& cfg, const PredictionModel& model,
                     const MpcProblem& problem, const Vector& moves,
                     Eigen::Vector2d* slack = nullptr);

MpcSolution mpc_solve(const MpcConfig& cfg, const PredictionModel& model,
                      const MpcProblem& problem,
                      const std::optional<Vector>& warm_start = std::nullopt);

/// min 0.5 x'Hx + c'x on lower <= x <= upper, H symmetric positive definite.
/// Primal active-set method; exact for the small dense problems used here.
Vector solve_box_qp(const Matrix& h, const Vector& c, const Vector& lower,
                    const Vector& upper, const Vector& start);

/// Single MPC controller: observer + optimizer.
class MpcController final : public Controller {
 public:
  MpcController(int id, std::string name, MpcConfig cfg,
                OperatingPoint op = OperatingPoint::canonical());

  int id() const override { return id_; }
  std::string name() const override { return name_; }
  ControlInput step(const ControllerIO& io) override;
  void track(const ControllerIO& io) override;
  void back_initialize(const ControllerIO& io) override;
  void reset() override;

  const DisturbanceObserver& observer() const { return observer_; }
  const MpcConfig& config() const { return cfg_; }
  /// Solver failures since construction (each fell back to u_prev).
  int solver_failures() const { return solver_failures_; }

 private:
  void observe(const ControllerIO& io);

  int id_;
  std::string name_;
  MpcConfig cfg_;
  OperatingPoint op_;
  LinearModel model_;
  DisturbanceObserver observer_;
  std::unique_ptr<PredictionModel> prediction_;
  std::optional<Vector> warm_start_;
  int solver_failures_ = 0;
};

/// Two observers, one optimizer: both estimates update every sample, and the
/// command comes from the plant-fed estimate while active and from the
/// simulation-fed one otherwise.
ControlInput mpc_dual_observer_step(MpcController& plant_fed,
                                    MpcController& sim_fed,
                                    const ControllerIO& plant_feed,
                                    const ControllerIO& sim_feed, bool active);

}  // namespace surge
