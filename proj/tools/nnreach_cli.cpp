// nnreach: command-line front end of the pipeline.
//
//   nnreach [--config run.json] [--out DIR] [--seed S] [--scenario nominal|rotor_failure] <command>
//
// Commands: generate, train, reach, validate, report.
// Exit codes: 0 success, 1 validation failure, 2 configuration or input
// error, 3 numeric failure.

#include "nnreach/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace nnreach;

namespace {

int run(const std::string& command, const RunConfig& c) {
  if (command == "generate") {
    const auto r = cmd_generate(c);
    std::printf("wrote %zu trajectories to %s\n", r.trajectories, r.dir.c_str());
  } else if (command == "train") {
    const auto r = cmd_train(c);
    std::printf("final loss %.6g after %d epochs, wall time %.2f s\n", r.final_loss, r.epochs, r.wall_seconds);
    std::printf("checkpoint %s\n", (r.dir / "model.json").c_str());
  } else if (command == "reach") {
    const auto r = cmd_reach(c);
    std::printf("%zu steps, per-step wall time mean %.4g s, max %.4g s, total %.4g s\n", r.steps, r.mean_step_seconds,
                r.max_step_seconds, r.total_seconds);
    std::printf("artifacts in %s\n", r.dir.c_str());
  } else if (command == "validate") {
    const auto r = cmd_validate(c);
    std::printf("lift self-test violations: %zu\n", r.self_test_violations);
    std::printf("model max violation fraction: %.4g (limit %.4g)\n", r.nn_max_violation_fraction,
                c.validate.max_violation_fraction);
    if (c.validate.truth) std::printf("truth max violation fraction: %.4g (reported only)\n", r.truth_max_violation_fraction);
    std::printf("%s, report %s\n", r.passed ? "PASS" : "FAIL", r.report.c_str());
    return r.passed ? 0 : 1;
  } else if (command == "report") {
    const auto r = cmd_report(c);
    std::printf("report for %zu scenario(s) in %s\n", r.scenarios.size(), r.dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachable-set approximation for learned quadrotor dynamics"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir, scenario;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Run directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "Override every seed");
  app.add_option("--scenario", scenario, "nominal | rotor_failure")->check(CLI::IsMember({"nominal", "rotor_failure"}));

  for (const char* name : {"generate", "train", "reach", "validate", "report"}) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_dir.empty()) c.output_dir = out_dir;
    if (*seed_opt) c.override_seed(seed);
    if (!scenario.empty()) c.scenario = scenario_from_string(scenario);
    return run(app.get_subcommands().front()->get_name(), c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
