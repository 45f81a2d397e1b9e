#include "surge/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace surge {

namespace {

int move_index(const MpcConfig& cfg, int sample) {
  return std::min(sample / cfg.nb, cfg.nc - 1);
}

// Below this volume the predicted density uses the floor instead, so a
// candidate that drains the tank gets a finite (heavily penalized) cost
// rather than an undefined one.
constexpr double kPredictionVolumeFloor = 1.0;

Eigen::Vector2d rk4(const Eigen::Vector2d& x, const ControlInput& u, double q_o,
                    const Disturbance& d, double dt) {
  auto f = [&](const Eigen::Vector2d& s) {
    const double inflow = u.q_i + u.q_w;
    return Eigen::Vector2d{
        inflow - q_o,
        (d.rho_i * u.q_i + u.q_w - s(1) * inflow) / std::max(s(0), kPredictionVolumeFloor)};
  };
  const Eigen::Vector2d k1 = f(x);
  const Eigen::Vector2d k2 = f(x + 0.5 * dt * k1);
  const Eigen::Vector2d k3 = f(x + 0.5 * dt * k2);
  const Eigen::Vector2d k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct Evaluation {
  Vector residual;
  Matrix jacobian;  // empty unless requested
  double cost = 0.0;
  Eigen::Vector2d slack = Eigen::Vector2d::Zero();
};

// Residual vector r(z) with cost = |r|^2:
//   [sqrt(Q)(ref - y_j)]_j, [sqrt(R) du_i]_i, sqrt(Psi) slack.
Evaluation evaluate(const MpcConfig& cfg, const PredictionModel& model,
                    const MpcProblem& problem, const Vector& z,
                    bool with_jacobian) {
  const int np = cfg.np;
  const int nc = cfg.nc;
  const Matrix outputs = model.rollout(problem.x0, problem.v_hat, z);
  const Eigen::Vector2d sq = cfg.q.cwiseSqrt();
  const Eigen::Vector2d sr = cfg.r.cwiseSqrt();
  const Eigen::Vector2d sp = cfg.psi.cwiseSqrt();
  const Eigen::Vector2d ref{problem.reference.v, problem.reference.rho};
  const Eigen::Vector2d y_min = cfg.limits.output_min();
  const Eigen::Vector2d y_max = cfg.limits.output_max();

  Evaluation ev;
  ev.residual = Vector::Zero(2 * np + 2 * nc + 2);
  for (int j = 0; j < np; ++j) {
    for (int c = 0; c < 2; ++c) {
      ev.residual(2 * j + c) = sq(c) * (ref(c) - outputs(c, j));
    }
  }
  Eigen::Vector2d previous = to_vector(problem.u_prev);
  for (int i = 0; i < nc; ++i) {
    const Eigen::Vector2d u = z.segment<2>(2 * i);
    ev.residual.segment<2>(2 * np + 2 * i) = sr.cwiseProduct(u - previous);
    previous = u;
  }
  int worst_sample[2] = {-1, -1};
  double worst_sign[2] = {0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < np; ++j) {
      const double above = outputs(c, j) - y_max(c);
      const double below = y_min(c) - outputs(c, j);
      if (above > ev.slack(c)) {
        ev.slack(c) = above;
        worst_sample[c] = j;
        worst_sign[c] = 1.0;
      }
      if (below > ev.slack(c)) {
        ev.slack(c) = below;
        worst_sample[c] = j;
        worst_sign[c] = -1.0;
      }
    }
    ev.residual(2 * np + 2 * nc + c) = sp(c) * ev.slack(c);
  }
  ev.cost = ev.residual.squaredNorm();

  if (with_jacobian) {
    const Matrix dy = model.jacobian(problem.x0, problem.v_hat, z);
    ev.jacobian = Matrix::Zero(ev.residual.size(), 2 * nc);
    for (int j = 0; j < np; ++j) {
      for (int c = 0; c < 2; ++c) {
        ev.jacobian.row(2 * j + c) = -sq(c) * dy.row(2 * j + c);
      }
    }
    for (int i = 0; i < nc; ++i) {
      for (int c = 0; c < 2; ++c) {
        ev.jacobian(2 * np + 2 * i + c, 2 * i + c) = sr(c);
        if (i > 0) ev.jacobian(2 * np + 2 * i + c, 2 * (i - 1) + c) = -sr(c);
      }
    }
    for (int c = 0; c < 2; ++c) {
      if (worst_sample[c] >= 0) {
        ev.jacobian.row(2 * np + 2 * nc + c) =
            sp(c) * worst_sign[c] * dy.row(2 * worst_sample[c] + c);
      }
    }
  }
  return ev;
}

}  // namespace

void MpcConfig::validate() const {
  if (np <= 0 || nc <= 0 || nb <= 0) {
    throw MpcError("MPC horizons must be positive");
  }
  if (np < nc * nb) {
    throw MpcError("MPC requires Np >= Nc * Nb");
  }
  if ((q.array() < 0.0).any() || (r.array() < 0.0).any() ||
      (psi.array() < 0.0).any()) {
    throw MpcError("MPC weights must be nonnegative");
  }
  if (!(dt > 0.0)) {
    throw MpcError("MPC sample time must be positive");
  }
}

LinearPrediction::LinearPrediction(const LinearModel& model,
                                   const OperatingPoint& op,
                                   const MpcConfig& cfg)
    : model_(model), op_(op), cfg_(cfg) {
  cfg_.validate();
  const int np = cfg_.np;
  const int nc = cfg_.nc;
  sensitivity_ = Matrix::Zero(2 * np, 2 * nc);
  for (int i = 0; i < nc; ++i) {
    for (int in = 0; in < 2; ++in) {
      Eigen::Vector2d dx = Eigen::Vector2d::Zero();
      for (int j = 0; j < np; ++j) {
        dx = model_.phi * dx;
        if (move_index(cfg_, j) == i) dx += model_.gamma.col(in);
        sensitivity_.block(2 * j, 2 * i + in, 2, 1) = dx;
      }
    }
  }
}

Matrix LinearPrediction::rollout(const PlantState& x0,
                                 const Eigen::Vector2d& v_hat,
                                 const Vector& moves) const {
  Matrix outputs(2, cfg_.np);
  const Eigen::Vector2d x_op = to_vector(op_.state);
  const Eigen::Vector2d u_op = to_vector(op_.input);
  Eigen::Vector2d dx = to_vector(x0) - x_op;
  for (int j = 0; j < cfg_.np; ++j) {
    const Eigen::Vector2d u =
        moves.segment<2>(2 * move_index(cfg_, j)) - u_op + v_hat;
    dx = model_.phi * dx + model_.gamma * u;
    outputs.col(j) = x_op + dx;
  }
  return outputs;
}

NonlinearPrediction::NonlinearPrediction(const OperatingPoint& op,
                                         const MpcConfig& cfg)
    : op_(op), cfg_(cfg) {
  cfg_.validate();
}

Matrix NonlinearPrediction::rollout(const PlantState& x0,
                                    const Eigen::Vector2d& v_hat,
                                    const Vector& moves) const {
  Matrix outputs(2, cfg_.np);
  Eigen::Vector2d x = to_vector(x0);
  for (int j = 0; j < cfg_.np; ++j) {
    const Eigen::Vector2d u = moves.segment<2>(2 * move_index(cfg_, j)) + v_hat;
    x = rk4(x, to_input(u), op_.q_o, op_.disturbance, cfg_.dt);
    outputs.col(j) = x;
  }
  return outputs;
}

Matrix NonlinearPrediction::jacobian(const PlantState& x0,
                                     const Eigen::Vector2d& v_hat,
                                     const Vector& moves) const {
  const int n = static_cast<int>(moves.size());
  Matrix jac(2 * cfg_.np, n);
  Vector perturbed = moves;
  for (int k = 0; k < n; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(moves(k)));
    perturbed(k) = moves(k) + h;
    const Matrix up = rollout(x0, v_hat, perturbed);
    perturbed(k) = moves(k) - h;
    const Matrix down = rollout(x0, v_hat, perturbed);
    perturbed(k) = moves(k);
    const Matrix diff = (up - down) / (2.0 * h);
    jac.col(k) = Eigen::Map<const Vector>(diff.data(), diff.size());
  }
  return jac;
}

std::unique_ptr<PredictionModel> make_prediction_model(const MpcConfig& cfg,
                                                       const OperatingPoint& op) {
  if (cfg.kind == ModelKind::kLinear) {
    return std::make_unique<LinearPrediction>(linearize(op, cfg.dt), op, cfg);
  }
  return std::make_unique<NonlinearPrediction>(op, cfg);
}

MoveBounds move_bounds(const MpcConfig& cfg, const ControlInput& u_prev) {
  MoveBounds b{Vector(2 * cfg.nc), Vector(2 * cfg.nc)};
  const Eigen::Vector2d lo = cfg.limits.input_min();
  const Eigen::Vector2d hi = cfg.limits.input_max();
  const Eigen::Vector2d prev = to_vector(u_prev);
  for (int i = 0; i < cfg.nc; ++i) {
    const double reach = cfg.limits.rate_limit * (i * cfg.nb + 1);
    for (int c = 0; c < 2; ++c) {
      const double l = std::max(lo(c), prev(c) - reach);
      const double u = std::min(hi(c), prev(c) + reach);
      if (l > u) {
        throw MpcError("MPC input box unreachable from the previous input");
      }
      b.lower(2 * i + c) = l;
      b.upper(2 * i + c) = u;
    }
  }
  return b;
}

double mpc_objective(const MpcConfig& cfg, const PredictionModel& model,
                     const MpcProblem& problem, const Vector& moves,
                     Eigen::Vector2d* slack) {
  const Evaluation ev = evaluate(cfg, model, problem, moves, false);
  if (slack != nullptr) *slack = ev.slack;
  return ev.cost;
}

Vector solve_box_qp(const Matrix& h, const Vector& c, const Vector& lower,
                    const Vector& upper, const Vector& start) {
  const Eigen::Index n = c.size();
  Vector x = start.cwiseMax(lower).cwiseMin(upper);
  // +1 / -1: fixed at upper / lower bound, 0: free.
  std::vector<int> fixed(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) <= lower(i)) fixed[static_cast<std::size_t>(i)] = -1;
    else if (x(i) >= upper(i)) fixed[static_cast<std::size_t>(i)] = 1;
  }
  const int max_iterations = 50 * static_cast<int>(n) + 50;
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    const Vector g = h * x + c;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fixed[static_cast<std::size_t>(i)] == 0) free.push_back(i);
    }
    Vector step = Vector::Zero(n);
    if (!free.empty()) {
      const auto m = static_cast<Eigen::Index>(free.size());
      Matrix hff(m, m);
      Vector gf(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        gf(a) = g(free[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < m; ++b) {
          hff(a, b) = h(free[static_cast<std::size_t>(a)],
                        free[static_cast<std::size_t>(b)]);
        }
      }
      const Vector df = hff.ldlt().solve(-gf);
      for (Eigen::Index a = 0; a < m; ++a) {
        step(free[static_cast<std::size_t>(a)]) = df(a);
      }
    }
    const double scale = 1.0 + x.cwiseAbs().maxCoeff();
    if (step.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
      // Subspace minimizer: release the most violated bound, if any.
      Eigen::Index release = -1;
      double worst = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int f = fixed[static_cast<std::size_t>(i)];
        if (f == 0) continue;
        const double multiplier = f < 0 ? g(i) : -g(i);
        if (multiplier < worst) {
          worst = multiplier;
          release = i;
        }
      }
      if (release < 0) return x;
      fixed[static_cast<std::size_t>(release)] = 0;
      continue;
    }
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (step(i) > 0.0 && x(i) + step(i) > upper(i)) {
        const double a = (upper(i) - x(i)) / step(i);
        if (a < alpha) { alpha = a; blocking = i; }
      } else if (step(i) < 0.0 && x(i) + step(i) < lower(i)) {
        const double a = (lower(i) - x(i)) / step(i);
        if (a < alpha) { alpha = a; blocking = i; }
      }
    }
    x += alpha * step;
    if (blocking >= 0) {
      const bool at_upper = step(blocking) > 0.0;
      x(blocking) = at_upper ? upper(blocking) : lower(blocking);
      fixed[static_cast<std::size_t>(blocking)] = at_upper ? 1 : -1;
    }
    x = x.cwiseMax(lower).cwiseMin(upper);
  }
  return x;
}

MpcSolution mpc_solve(const MpcConfig& cfg, const PredictionModel& model,
                      const MpcProblem& problem,
                      const std::optional<Vector>& warm_start) {
  cfg.validate();
  const MoveBounds bounds = move_bounds(cfg, problem.u_prev);
  Vector z(2 * cfg.nc);
  if (warm_start && warm_start->size() == z.size()) {
    z = *warm_start;
  } else {
    for (int i = 0; i < cfg.nc; ++i) z.segment<2>(2 * i) = to_vector(problem.u_prev);
  }
  z = z.cwiseMax(bounds.lower).cwiseMin(bounds.upper);

  MpcSolution solution;
  try {
    Evaluation ev = evaluate(cfg, model, problem, z, true);
    for (int iteration = 1; iteration <= cfg.max_iterations; ++iteration) {
      solution.iterations = iteration;
      Matrix hessian = ev.jacobian.transpose() * ev.jacobian;
      const Vector gradient = ev.jacobian.transpose() * ev.residual;
      hessian.diagonal().array() +=
          1e-14 * std::max(hessian.diagonal().maxCoeff(), 1e-300);
      // Gauss-Newton model in absolute moves: 0.5 x'Hx + (g - Hz)'x.
      const Vector target = solve_box_qp(hessian, gradient - hessian * z,
                                         bounds.lower, bounds.upper, z);
      const Vector step = target - z;
      if (step.cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + z.cwiseAbs().maxCoeff())) {
        break;
      }
      const double slope = 2.0 * gradient.dot(step);
      double alpha = 1.0;
      bool accepted = false;
      Evaluation trial;
      for (int halving = 0; halving < 40; ++halving) {
        try {
          trial = evaluate(cfg, model, problem, z + alpha * step, false);
        } catch (const PlantError&) {
          // The trial drains the tank in the prediction; shorten the step.
          alpha *= 0.5;
          continue;
        }
        if (trial.cost <= ev.cost + 1e-4 * alpha * std::min(slope, 0.0)) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // No descent left at double precision.
        if (-slope <= 1e-10 * std::max(ev.cost, 1e-300)) break;
        throw MpcError("MPC line search failed");
      }
      z += alpha * step;
      const double previous_cost = ev.cost;
      ev = evaluate(cfg, model, problem, z, true);
      if (previous_cost - ev.cost <= 1e-14 * previous_cost) break;
      if (iteration == cfg.max_iterations) {
        throw MpcError("MPC optimizer did not converge in " +
                       std::to_string(cfg.max_iterations) + " iterations");
      }
    }
    solution.moves = z;
    solution.objective = ev.cost;
    solution.slack = ev.slack;
  } catch (const PlantError& e) {
    throw MpcError(std::string("MPC prediction failed: ") + e.what());
  }
  return solution;
}

MpcController::MpcController(int id, std::string name, MpcConfig cfg,
                             OperatingPoint op)
    : id_(id),
      name_(std::move(name)),
      cfg_(cfg),
      op_(op),
      model_(linearize(op, cfg.dt)),
      observer_(model_, op_),
      prediction_(make_prediction_model(cfg_, op_)) {}

void MpcController::observe(const ControllerIO& io) {
  if (!observer_.initialized()) {
    observer_.initialize(io.y);
  } else {
    observer_.predict(io.u_applied_prev);
  }
  observer_.correct(io.y);
}

ControlInput MpcController::step(const ControllerIO& io) {
  observe(io);
  MpcProblem problem{observer_.state_estimate(),
                     observer_.disturbance_estimate(), io.r, io.u_applied_prev};
  try {
    const MpcSolution s = mpc_solve(cfg_, *prediction_, problem, warm_start_);
    // Shift the sequence by one move for the next sample.
    Vector next = s.moves;
    for (int i = 0; i + 1 < cfg_.nc; ++i) {
      next.segment<2>(2 * i) = s.moves.segment<2>(2 * i + 2);
    }
    warm_start_ = next;
    return s.first();
  } catch (const MpcError&) {
    ++solver_failures_;
    warm_start_.reset();
    return io.u_applied_prev;
  }
}

void MpcController::track(const ControllerIO& io) { observe(io); }

void MpcController::back_initialize(const ControllerIO& /*io*/) {
  // The plant-fed observer has been tracking all along; only the stale
  // warm start needs dropping.
  warm_start_.reset();
}

void MpcController::reset() {
  observer_ = DisturbanceObserver(model_, op_);
  warm_start_.reset();
  solver_failures_ = 0;
}

ControlInput mpc_dual_observer_step(MpcController& plant_fed,
                                    MpcController& sim_fed,
                                    const ControllerIO& plant_feed,
                                    const ControllerIO& sim_feed, bool active) {
  if (active) {
    sim_fed.track(sim_feed);
    return plant_fed.step(plant_feed);
  }
  plant_fed.track(plant_feed);
  return sim_fed.step(sim_feed);
}

}  // namespace surge
