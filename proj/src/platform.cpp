#include "surge/platform.hpp"

#include <algorithm>
#include <cmath>

#include "surge/registry.hpp"

namespace surge {

namespace {

int rounded_ratio(double numerator, double denominator) {
  return static_cast<int>(std::llround(numerator / denominator));
}

bool integral_ratio(double numerator, double denominator) {
  const double ratio = numerator / denominator;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio);
}

bool in_fault(const std::vector<FaultInterval>& faults, double t) {
  return std::any_of(faults.begin(), faults.end(), [t](const FaultInterval& f) {
    return t >= f.start && t < f.end;
  });
}

}  // namespace

int SelectorConfig::horizon_samples() const { return rounded_ratio(horizon, dt); }

void validate_switching_config(const SelectorConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0) || !(cfg.bandwidth > 0.0)) {
    throw ConfigError("selector: dt, horizon and bandwidth must be positive");
  }
  const double product = cfg.bandwidth * cfg.dt;
  constexpr double kSlack = 1e-12;
  if (product < 0.2 - kSlack || product > 0.6 + kSlack) {
    throw ConfigError("selector: bandwidth * dt = " + std::to_string(product) +
                      " is outside [0.2, 0.6]");
  }
  const double slowest = 1.0 / cfg.bandwidth;
  if (cfg.horizon < 10.0 * slowest - kSlack) {
    throw ConfigError("selector: evaluation horizon " +
                      std::to_string(cfg.horizon) +
                      " h is shorter than ten closed-loop time constants (" +
                      std::to_string(10.0 * slowest) + " h)");
  }
  if (!integral_ratio(cfg.horizon, cfg.dt)) {
    throw ConfigError("selector: evaluation horizon is not a whole number of samples");
  }
  if ((cfg.we.array() < 0.0).any() || (cfg.wu.array() < 0.0).any()) {
    throw ConfigError("selector: weights must be nonnegative");
  }
}

double performance_index(const std::vector<Reference>& r,
                         const std::vector<PlantState>& y,
                         const std::vector<ControlInput>& u,
                         const SelectorConfig& cfg,
                         std::optional<ControlInput> u_before) {
  if (r.size() != y.size() ||
      (cfg.kind == IndexKind::kErrorPlusMove && u.size() != y.size())) {
    throw ConfigError("performance_index: sequence lengths differ");
  }
  double j = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double ev = r[k].v - y[k].v;
    const double er = r[k].rho - y[k].rho;
    j += cfg.we(0) * ev * ev + cfg.we(1) * er * er;
  }
  if (cfg.kind == IndexKind::kErrorPlusMove) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      const ControlInput* before = k > 0 ? &u[k - 1] : (u_before ? &*u_before : nullptr);
      if (before == nullptr) continue;
      const double di = u[k].q_i - before->q_i;
      const double dw = u[k].q_w - before->q_w;
      j += cfg.wu(0) * di * di + cfg.wu(1) * dw * dw;
    }
  }
  return j;
}

Enforcement enforce_constraints(const ControlInput& u_commanded,
                                const ControlInput& u_applied_prev,
                                const PlantLimits& limits) {
  ControlInput u = u_commanded;
  u.q_i = std::clamp(u.q_i, limits.q_i_min, limits.q_i_max);
  u.q_w = std::clamp(u.q_w, limits.q_w_min, limits.q_w_max);
  u.q_i = std::clamp(u.q_i, u_applied_prev.q_i - limits.rate_limit,
                     u_applied_prev.q_i + limits.rate_limit);
  u.q_w = std::clamp(u.q_w, u_applied_prev.q_w - limits.rate_limit,
                     u_applied_prev.q_w + limits.rate_limit);
  return {u, u.q_i != u_commanded.q_i || u.q_w != u_commanded.q_w};
}

int select(const std::vector<EvaluationRecord>& records, int incumbent) {
  const EvaluationRecord* best = nullptr;
  for (const EvaluationRecord& rec : records) {
    if (rec.flagged) continue;
    if (best == nullptr || rec.j < best->j ||
        (rec.j == best->j && rec.controller_id == incumbent)) {
      best = &rec;
    }
  }
  return best == nullptr ? static_cast<int>(kLocalPi) : best->controller_id;
}

HorizonEvaluation evaluate_horizon(std::vector<SimLoop*>& loops,
                                   const EvaluationModel& model,
                                   const Reference& reference,
                                   const DisturbanceProfile& disturbance,
                                   const HorizonWindow& window,
                                   const SelectorConfig& cfg) {
  HorizonEvaluation out;
  out.records.resize(loops.size());
  out.y.resize(loops.size());
  out.u.resize(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) {
    SimLoop& loop = *loops[i];
    EvaluationRecord& rec = out.records[i];
    rec.controller_id = loop.controller->id();
    rec.horizon = window.index;
    const ControlInput u_before = loop.u_prev;
    std::vector<Reference> refs;
    for (int k = 0; k < window.samples; ++k) {
      const double t = (window.first_sample + k) * cfg.dt;
      const Disturbance d = sample_disturbance(disturbance, t);
      const ControllerIO io{reference, loop.x, loop.u_prev, cfg.dt};
      ControlInput command = loop.u_prev;
      try {
        command = loop.controller->step(io);
      } catch (const std::exception&) {
        rec.flagged = true;
      }
      const Enforcement e = enforce_constraints(command, loop.u_prev, model.limits);
      rec.flagged = rec.flagged || e.clamped;
      out.y[i].push_back(loop.x);
      out.u[i].push_back(e.applied);
      refs.push_back(reference);
      loop.x = step_plant(loop.x, e.applied, model.op.q_o, d, {}, cfg.dt);
      loop.u_prev = e.applied;
    }
    rec.j = performance_index(refs, out.y[i], out.u[i], cfg, u_before);
  }
  return out;
}

int PlatformScenario::samples() const { return rounded_ratio(duration, dt); }

void PlatformScenario::validate() const {
  if (!(duration > 0.0) || !(dt > 0.0) || !integral_ratio(duration, dt)) {
    throw ConfigError("scenario: duration must be a positive whole number of samples");
  }
  if (std::abs(selector.dt - dt) > 1e-15) {
    throw ConfigError("scenario: selector and plant sample times differ");
  }
  validate_switching_config(selector);
  if (controllers.empty()) {
    throw ConfigError("scenario: no controllers enabled");
  }
  for (std::size_t i = 0; i < controllers.size(); ++i) {
    if (!is_known_controller(controllers[i])) {
      throw ConfigError("scenario: unknown controller id " +
                        std::to_string(controllers[i]));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (controllers[j] == controllers[i]) {
        throw ConfigError("scenario: controller id listed twice");
      }
    }
  }
  if (!(uncertainty.q_i_gain > 0.0) || !(uncertainty.q_w_gain > 0.0)) {
    throw ConfigError("scenario: actuator gain multipliers must be positive");
  }
  for (const FaultInterval& f : faults) {
    if (!(f.end > f.start)) throw ConfigError("scenario: empty fault interval");
  }
  try {
    disturbance.validate(limits);
  } catch (const PlantError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (disturbance.duration < duration - 1e-12) {
    throw ConfigError("scenario: disturbance profile shorter than the run");
  }
  if (!(x0.v > 0.0)) throw ConfigError("scenario: initial volume must be positive");
}

SseSummary PlatformTrace::sse(const Eigen::Vector2d& we) const {
  SseSummary s;
  for (const TraceSample& k : samples) {
    const double ev = k.r.v - k.y.v;
    const double er = k.r.rho - k.y.rho;
    s.sse_v += ev * ev;
    s.sse_rho += er * er;
  }
  s.sse_total = we(0) * s.sse_v + we(1) * s.sse_rho;
  return s;
}

namespace {

struct Competitor {
  int id = 0;
  bool competing = true;
  std::unique_ptr<Controller> plant_side;
  SimLoop sim;
};

void record_sample(PlatformTrace& trace, const PlatformScenario& sc, int k,
                   const PlantState& y, const ControlInput& command,
                   const Enforcement& e, const ControlInput& u_prev,
                   const Disturbance& d, int active) {
  trace.samples.push_back(
      {k * sc.dt, sc.reference, y, command, e.applied, d.rho_i, active});
  if (k > 0) {
    trace.max_rate(0) = std::max(trace.max_rate(0), std::abs(e.applied.q_i - u_prev.q_i));
    trace.max_rate(1) = std::max(trace.max_rate(1), std::abs(e.applied.q_w - u_prev.q_w));
  }
  if (!sc.limits.output_within(y)) ++trace.output_excursions;
}

}  // namespace

PlatformTrace run_platform(const PlatformScenario& scenario) {
  scenario.validate();
  PlatformTrace trace;
  const int total = scenario.samples();
  const int per_horizon = scenario.selector.horizon_samples();

  std::vector<Competitor> competitors;
  auto add = [&](int id, bool competing) {
    Competitor c;
    c.id = id;
    c.competing = competing;
    c.plant_side = make_controller(id, scenario.dt);
    c.sim = SimLoop{make_controller(id, scenario.dt), scenario.x0, scenario.u0};
    competitors.push_back(std::move(c));
  };
  if (std::find(scenario.controllers.begin(), scenario.controllers.end(),
                static_cast<int>(kLocalPi)) == scenario.controllers.end()) {
    add(kLocalPi, false);
  }
  for (int id : scenario.controllers) add(id, true);
  auto find = [&](int id) -> Competitor& {
    for (Competitor& c : competitors) {
      if (c.id == id) return c;
    }
    throw ConfigError("controller id not registered");
  };

  const EvaluationModel evaluation_model{
      OperatingPoint{scenario.x0, scenario.u0, scenario.q_o, {}}, scenario.limits};
  std::vector<SimLoop*> sims;
  for (Competitor& c : competitors) {
    if (c.competing) sims.push_back(&c.sim);
  }

  int active = kLocalPi;
  int pending = -1;  // controller to install at the next sample
  SwitchReason pending_reason = SwitchReason::kEvaluation;
  PlantState x = scenario.x0;
  ControlInput u_prev = scenario.u0;

  try {
    for (int h = 0; h * per_horizon < total; ++h) {
      const HorizonWindow window{h, h * per_horizon,
                                 std::min(per_horizon, total - h * per_horizon)};
      HorizonEvaluation evaluation =
          evaluate_horizon(sims, evaluation_model, scenario.reference,
                           scenario.disturbance, window, scenario.selector);
      HorizonReport report{window, evaluation.records, active, active};

      for (int k = window.first_sample; k < window.first_sample + window.samples; ++k) {
        const double t = k * scenario.dt;
        const Disturbance d = sample_disturbance(scenario.disturbance, t);
        const ControllerIO io{scenario.reference, x, u_prev, scenario.dt};

        if (in_fault(scenario.faults, t) && active != kLocalPi) {
          pending = kLocalPi;
          pending_reason = SwitchReason::kFault;
        }
        std::optional<SwitchEvent> event;
        if (pending >= 0 && pending != active) {
          event = SwitchEvent{k, t, active, pending, pending_reason, {}};
          active = pending;
          find(active).plant_side->back_initialize(io);
        }
        pending = -1;

        for (Competitor& c : competitors) {
          if (c.id != active) c.plant_side->track(io);
        }
        ControlInput command;
        try {
          command = find(active).plant_side->step(io);
        } catch (const std::exception&) {
          if (active == kLocalPi) throw;
          event = SwitchEvent{k, t, active, kLocalPi, SwitchReason::kControllerFailure, {}};
          active = kLocalPi;
          Controller& local = *find(kLocalPi).plant_side;
          local.back_initialize(io);
          command = local.step(io);
        }
        const Enforcement e = enforce_constraints(command, u_prev, scenario.limits);
        if (event) {
          event->bump = {std::abs(command.q_i - u_prev.q_i),
                         std::abs(command.q_w - u_prev.q_w)};
          trace.switches.push_back(*event);
        }
        record_sample(trace, scenario, k, x, command, e, u_prev, d, active);
        x = step_plant(x, e.applied, scenario.q_o, d, scenario.uncertainty, scenario.dt);
        u_prev = e.applied;
      }

      const int next_sample = window.first_sample + window.samples;
      if (next_sample < total) {
        const int choice = select(evaluation.records, active);
        report.selected = choice;
        if (!in_fault(scenario.faults, next_sample * scenario.dt) &&
            choice != active) {
          pending = choice;
          pending_reason = SwitchReason::kEvaluation;
        }
      }
      trace.horizons.push_back(std::move(report));
    }
  } catch (const std::exception& e) {
    trace.failure = e.what();
  }
  return trace;
}

PlatformTrace run_closed_loop(int controller_id, const PlatformScenario& scenario) {
  scenario.validate();
  PlatformTrace trace;
  std::unique_ptr<Controller> controller = make_controller(controller_id, scenario.dt);
  PlantState x = scenario.x0;
  ControlInput u_prev = scenario.u0;
  try {
    for (int k = 0; k < scenario.samples(); ++k) {
      const double t = k * scenario.dt;
      const Disturbance d = sample_disturbance(scenario.disturbance, t);
      const ControllerIO io{scenario.reference, x, u_prev, scenario.dt};
      const ControlInput command = controller->step(io);
      const Enforcement e = enforce_constraints(command, u_prev, scenario.limits);
      record_sample(trace, scenario, k, x, command, e, u_prev, d, controller_id);
      x = step_plant(x, e.applied, scenario.q_o, d, scenario.uncertainty, scenario.dt);
      u_prev = e.applied;
    }
  } catch (const std::exception& e) {
    trace.failure = e.what();
  }
  return trace;
}

}  // namespace surge
