#include "surge/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>

#include "surge/format.hpp"
#include "surge/registry.hpp"

namespace surge {

namespace fs = std::filesystem;

namespace {

using FileSet = std::vector<std::pair<std::string, std::string>>;

// Each file goes to a temporary name first; the renames happen only after
// every write succeeded.
void write_files(const fs::path& dir, const FileSet& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CommandError("cannot create '" + dir.string() + "': " + ec.message());
  std::vector<fs::path> temporaries;
  auto cleanup = [&] {
    for (const fs::path& t : temporaries) fs::remove(t, ec);
  };
  for (const auto& [name, content] : files) {
    const fs::path tmp = dir / (name + ".tmp");
    temporaries.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    out.close();
    if (!out) {
      cleanup();
      throw CommandError("cannot write '" + tmp.string() + "'");
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    fs::rename(temporaries[i], dir / files[i].first, ec);
    if (ec) {
      cleanup();
      throw CommandError("cannot write '" + (dir / files[i].first).string() + "'");
    }
  }
}

void write_sse(std::ostream& out, const std::string& label, const SseSummary& s) {
  out << label << ": SSE_v = " << format_number(s.sse_v)
      << ", SSE_rho = " << format_number(s.sse_rho)
      << ", SSE_tot = " << format_number(s.sse_total) << '\n';
}

const char* reason_text(SwitchReason r) {
  switch (r) {
    case SwitchReason::kEvaluation: return "evaluation";
    case SwitchReason::kFault: return "fault";
    case SwitchReason::kControllerFailure: return "controller failure";
  }
  return "?";
}

}  // namespace

fs::path resolve_output_dir(const std::optional<std::string>& flag,
                            const std::string& fallback) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("SURGE_OUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return fallback;
}

void write_trace_csv(std::ostream& out, const PlatformTrace& trace) {
  out << "t_hours,r_v,r_rho,y_v,y_rho,u_qi_cmd,u_qw_cmd,u_qi_applied,u_qw_applied,"
         "rho_i,active_id\n";
  for (const TraceSample& s : trace.samples) {
    out << format_number(s.t) << ',' << format_number(s.r.v) << ','
        << format_number(s.r.rho) << ',' << format_number(s.y.v) << ','
        << format_number(s.y.rho) << ',' << format_number(s.u_commanded.q_i) << ','
        << format_number(s.u_commanded.q_w) << ',' << format_number(s.u_applied.q_i)
        << ',' << format_number(s.u_applied.q_w) << ',' << format_number(s.rho_i) << ','
        << s.active_id << '\n';
  }
}

void write_horizon_csv(std::ostream& out, const PlatformTrace& trace,
                       const std::vector<int>& controller_ids) {
  out << "horizon,t_start_hours,t_end_hours,active_id,selected_id";
  for (int id : controller_ids) out << ",J_" << id;
  for (int id : controller_ids) out << ",flagged_" << id;
  out << '\n';
  const double dt = trace.samples.size() > 1 ? trace.samples[1].t - trace.samples[0].t : 0.0;
  for (const HorizonReport& h : trace.horizons) {
    out << h.window.index << ',' << format_number(h.window.first_sample * dt) << ','
        << format_number((h.window.first_sample + h.window.samples) * dt) << ','
        << h.active_during << ',' << h.selected;
    auto find = [&](int id) -> const EvaluationRecord* {
      for (const EvaluationRecord& r : h.records) {
        if (r.controller_id == id) return &r;
      }
      return nullptr;
    };
    for (int id : controller_ids) {
      const EvaluationRecord* r = find(id);
      out << ',' << (r ? format_number(r->j) : "");
    }
    for (int id : controller_ids) {
      const EvaluationRecord* r = find(id);
      out << ',' << (r ? (r->flagged ? "1" : "0") : "");
    }
    out << '\n';
  }
}

SimulationResult cmd_simulate(const Scenario& scenario, const fs::path& out_dir,
                              std::ostream& log) {
  const PlatformScenario& sc = scenario.platform;
  SimulationResult result;
  result.trace = run_platform(sc);
  if (!result.trace.failure.empty()) {
    throw CommandError("platform run stopped at t = " +
                       format_number(result.trace.samples.size() * sc.dt) +
                       " h: " + result.trace.failure);
  }
  result.platform_sse = result.trace.sse(sc.selector.we);
  for (int id : sc.controllers) {
    const PlatformTrace alone = run_closed_loop(id, sc);
    if (!alone.failure.empty()) {
      throw CommandError(controller_name(id) + " standalone run failed: " + alone.failure);
    }
    result.standalone.push_back({id, alone.sse(sc.selector.we)});
  }

  std::ostringstream trace_csv;
  write_trace_csv(trace_csv, result.trace);
  std::ostringstream horizon_csv;
  write_horizon_csv(horizon_csv, result.trace, sc.controllers);

  std::ostringstream summary;
  summary << "samples: " << result.trace.samples.size() << '\n'
          << "horizons: " << result.trace.horizons.size() << '\n';
  write_sse(summary, "platform", result.platform_sse);
  for (const StandaloneResult& s : result.standalone) {
    write_sse(summary, controller_name(s.controller_id) + " (id " +
                           std::to_string(s.controller_id) + ") alone", s.sse);
  }
  summary << "switches: " << result.trace.switches.size() << '\n';
  for (const SwitchEvent& e : result.trace.switches) {
    summary << "  t = " << format_number(e.t) << " h: " << e.from << " -> " << e.to
            << " (" << reason_text(e.reason) << "), bump q_i = "
            << format_number(e.bump(0)) << ", q_w = " << format_number(e.bump(1)) << '\n';
  }
  summary << "max applied change per sample: q_i = "
          << format_number(result.trace.max_rate(0))
          << ", q_w = " << format_number(result.trace.max_rate(1)) << '\n'
          << "output samples outside bounds: " << result.trace.output_excursions << '\n';

  write_files(out_dir, {{"trace.csv", trace_csv.str()},
                        {"horizons.csv", horizon_csv.str()},
                        {"summary.txt", summary.str()}});
  log << summary.str();
  return result;
}

StepStudyResult run_step_study(const StepStudyOptions& o) {
  if (!is_known_controller(o.controller)) {
    throw CommandError("unknown controller id " + std::to_string(o.controller));
  }
  if (!(o.settle_hours > 0.0) || !(o.after_hours > 0.0)) {
    throw CommandError("step study needs positive settle and response times");
  }
  PlatformScenario sc;
  sc.dt = o.dt;
  sc.selector.dt = o.dt;
  sc.duration = o.settle_hours + o.after_hours;
  sc.uncertainty = {1.0, o.q_w_gain};
  sc.controllers = {o.controller};
  const double base = OperatingPoint::canonical().disturbance.rho_i;
  sc.disturbance.duration = sc.duration;
  sc.disturbance.knots = {{0.0, base}, {o.settle_hours, base + o.step}};
  try {
    sc.validate();
  } catch (const ConfigError& e) {
    throw CommandError(e.what());
  }

  StepStudyResult r;
  r.step_time = o.settle_hours;
  r.trace = run_closed_loop(o.controller, sc);
  if (!r.trace.failure.empty()) throw CommandError("step study failed: " + r.trace.failure);
  double last_outside = -1.0;
  for (const TraceSample& s : r.trace.samples) {
    if (s.t + 1e-12 < r.step_time) continue;
    if (std::abs(s.y.rho - s.r.rho) > o.band) last_outside = s.t;
  }
  r.settling_time = last_outside < 0.0 ? 0.0 : last_outside + o.dt - r.step_time;
  const TraceSample& last = r.trace.samples.back();
  r.final_error_v = last.r.v - last.y.v;
  r.final_error_rho = last.r.rho - last.y.rho;
  return r;
}

StepStudyResult cmd_step_study(const StepStudyOptions& options, const fs::path& out_dir,
                               std::ostream& log) {
  StepStudyResult r = run_step_study(options);
  std::ostringstream csv;
  write_trace_csv(csv, r.trace);
  std::ostringstream summary;
  summary << "controller: " << controller_name(options.controller) << " (id "
          << options.controller << ")\n"
          << "rho_i step: " << format_number(options.step) << " t/m3 at t = "
          << format_number(r.step_time) << " h, q_w gain "
          << format_number(options.q_w_gain) << '\n'
          << "settling time (|e_rho| <= " << format_number(options.band)
          << "): " << format_number(r.settling_time) << " h\n"
          << "final e_v: " << format_number(r.final_error_v) << " m3\n"
          << "final e_rho: " << format_number(r.final_error_rho) << " t/m3\n";
  const std::string stem = "step_" + std::to_string(options.controller);
  write_files(out_dir, {{stem + ".csv", csv.str()}, {stem + "_summary.txt", summary.str()}});
  log << summary.str();
  return r;
}

ControllabilityReport cmd_analyze(const std::optional<fs::path>& model_file,
                                  const fs::path& out_dir, std::ostream& log) {
  LtiModel model = LtiModel::from_linearization(linearize(OperatingPoint::canonical()));
  if (model_file) {
    std::ifstream in(*model_file);
    if (!in) throw CommandError("cannot open model '" + model_file->string() + "'");
    try {
      model = read_lti_model(in);
    } catch (const AnalysisError& e) {
      throw CommandError(model_file->string() + ": " + e.what());
    }
  }
  const ScalingSet scaling =
      model_file ? ScalingSet{Vector::Ones(model.c.rows()), Vector::Ones(model.b.cols()),
                              Vector::Ones(std::max<Eigen::Index>(model.gd.cols(), 1))}
                 : ScalingSet::surge_tank();
  if (model.gd.size() == 0) model.gd = Matrix::Zero(model.a.rows(), 1);
  ControllabilityReport report;
  try {
    report = analyze_model(model, scaling, default_frequency_grid());
  } catch (const std::exception& e) {
    throw CommandError(std::string("analysis failed: ") + e.what());
  }
  std::ostringstream text;
  write_report(text, report);
  std::ostringstream sweep_g;
  write_sweep_csv(sweep_g, report.sweep_g);
  std::ostringstream sweep_gd;
  write_sweep_csv(sweep_gd, report.sweep_gd);
  write_files(out_dir, {{"report.txt", text.str()},
                        {"sweep_g.csv", sweep_g.str()},
                        {"sweep_gd.csv", sweep_gd.str()}});
  log << text.str();
  return report;
}

}  // namespace surge
