#pragma once

#include "adaptreg/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace adaptreg {

/// Flat experiment description read from a JSON object. Every key is
/// optional in the file (defaults below) but unknown keys are rejected so a
/// config file always means exactly one experiment.
struct ExperimentConfig {
  std::string experiment = "scalar_suite";  // cartpole | limit_cycle | scalar_suite | custom
  std::string law = "ogd";                  // vg | ogd | newton | rls | frozen
  std::vector<long> horizons{256, 512, 1024};
  int n_rollouts = 64;
  int delay = 0;
  std::string noise_kind = "bounded_uniform_ball";  // zero | bounded_uniform_ball | scaled_gaussian
  double noise_bound = 0.1;                         // W
  double noise_sigma = 0.1;
  double noise_tau = 1.0;
  std::uint64_t seed = 1;
  std::string initial_estimate = "zero";  // zero | truth

  // Constant overrides; unset means "take it from the experiment".
  std::optional<double> radius;          // D
  std::optional<double> regularizer;     // lambda
  std::optional<double> op_norm_bound;   // M
  std::optional<double> newton_step;     // eta
  std::optional<double> gradient_bound;  // G

  // Experiment parameters.
  std::optional<int> features;  // 400 for cartpole, 200 for limit_cycle
  double alpha_norm = 1.0;
  std::optional<std::vector<double>> x0;
  bool state_independent_basis = false;
  int n_trajectories = 500;
  long baseline_horizon = 20000;
  double initial_radius = 0.5;
  std::string cartpole_design = "wrong";  // wrong | true

  // custom: x_{t+1} = A x + B (u - Y alpha) + w with constant matrices (row-major).
  std::vector<std::vector<double>> custom_A;
  std::vector<std::vector<double>> custom_B;
  std::vector<std::vector<double>> custom_Y;
  std::vector<double> custom_alpha;

  // Verification.
  std::optional<double> lyapunov_rate;    // overrides rho of the Lyapunov certificate
  std::optional<double> contraction_rate; // overrides gamma of the contraction certificate
  int lhs_samples = 4096;
  std::optional<double> zoh_Lf;
  std::optional<double> zoh_Lpi;
  std::optional<double> zoh_LQ;
  std::optional<double> zoh_rho;
  std::optional<double> zoh_mu;
  std::optional<double> zoh_lambda;
  std::optional<double> zoh_L;
  std::optional<double> zoh_LM;
  std::optional<double> zoh_D;
  double gamma_split = 0.5;

  // Output.
  std::string output_dir = "out";
  int trajectory_files = 4;
  int jobs = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates; throws ConfigurationError naming the failing key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON with every key present (unset optionals as null).
std::string dump_config(const ExperimentConfig& config);

/// Range and consistency checks; throws ConfigurationError naming the key.
void validate_config(const ExperimentConfig& config);

/// Every accepted key, in serialization order.
const std::vector<std::string>& config_keys();

}  // namespace adaptreg
