#pragma once

#include "adaptreg/adapt.hpp"
#include "adaptreg/config.hpp"
#include "adaptreg/dynamics.hpp"
#include "adaptreg/regret.hpp"
#include "adaptreg/stability.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace adaptreg {

/// Everything a config resolves to (for every experiment except cartpole,
/// whose study has its own driver).
struct ResolvedExperiment {
  SystemModel model;
  Vector x0;
  LawConfig law;
  NoiseSpec noise;
  std::optional<LyapunovCertificate> lyapunov;
  std::optional<ContractionCertificate> contraction;
  DirectionField contraction_directions;
  JacobianMap jacobian;
  std::optional<IncrementalStabilityConstants> iss;
  SampleGrid grid;
};

ResolvedExperiment resolve_experiment(const ExperimentConfig& config);

/// Decimal with 17 significant digits.
std::string format_number(double value);

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitCheckFailed = 2 };

/// Runs the configured experiment and writes regret.csv (or
/// cartpole_costs.csv), trajectory_<seed>.csv and summary.json into `out`.
/// Errors go to `err` with the failing key.
int run_experiment(const ExperimentConfig& config, const std::filesystem::path& out,
                   std::ostream& err);

/// Runs every certificate check and budget the config declares and writes
/// verify.json into `out`.
int verify_experiment(const ExperimentConfig& config, const std::filesystem::path& out,
                      std::ostream& err);

}  // namespace adaptreg
