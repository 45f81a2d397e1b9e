#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "surge/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Surge-tank competing-controller platform"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--out", out_dir, "Output directory (overrides $SURGE_OUT_DIR)");
  app.add_option("--seed", seed, "Seed for randomly generated disturbance profiles");

  std::string scenario_path;
  CLI::App* simulate = app.add_subcommand("simulate", "Run a platform scenario");
  simulate->add_option("scenario", scenario_path, "Scenario file")->required();

  surge::StepStudyOptions step;
  CLI::App* step_study =
      app.add_subcommand("step-study", "Single-controller response to a feed-density step");
  step_study->add_option("--controller", step.controller, "Controller id (0-3)")->required();
  step_study->add_option("--step", step.step, "Step in rho_i, t/m3")->capture_default_str();
  step_study->add_option("--qw-gain", step.q_w_gain, "Actuator gain on q_w")
      ->capture_default_str();

  std::optional<std::string> model_path;
  CLI::App* analyze = app.add_subcommand("analyze", "Input/output controllability report");
  analyze->add_option("--model", model_path, "LTI model file (default: linearized tank)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      surge::Scenario scenario = surge::load_scenario(scenario_path);
      if (seed) {
        scenario.seed = *seed;
        scenario.load_profile();
        scenario.platform.validate();
      }
      surge::cmd_simulate(scenario, surge::resolve_output_dir(out_dir, scenario.output_dir),
                          std::cout);
    } else if (step_study->parsed()) {
      surge::cmd_step_study(step, surge::resolve_output_dir(out_dir, "out"), std::cout);
    } else if (analyze->parsed()) {
      std::optional<std::filesystem::path> model;
      if (model_path) model = *model_path;
      surge::cmd_analyze(model, surge::resolve_output_dir(out_dir, "out"), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
