#include "adaptreg/config.hpp"
#include "adaptreg/runner.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Adaptive control regret experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> seeds;
  std::optional<int> jobs;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "JSON experiment config")->required();
    cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    cmd->add_option("--seeds", seeds, "Number of rollouts (overrides n_rollouts)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--jobs", jobs, "Worker threads, 0 for all (overrides jobs)")
        ->check(CLI::NonNegativeNumber);
  };
  CLI::App* run = app.add_subcommand("run", "Run the experiment and write CSV and JSON results");
  CLI::App* verify = app.add_subcommand("verify", "Check the certificates and write verify.json");
  add_common(run);
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : adaptreg::kExitConfig;
  }

  adaptreg::ExperimentConfig config;
  try {
    config = adaptreg::load_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (seeds) config.n_rollouts = *seeds;
    if (jobs) config.jobs = *jobs;
    adaptreg::validate_config(config);
  } catch (const adaptreg::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return adaptreg::kExitConfig;
  }

  if (run->parsed()) return adaptreg::run_experiment(config, config.output_dir, std::cerr);
  return adaptreg::verify_experiment(config, config.output_dir, std::cerr);
}
