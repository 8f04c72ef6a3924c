#pragma once

#include "adaptreg/adapt.hpp"
#include "adaptreg/dynamics.hpp"
#include "adaptreg/stability.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adaptreg {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n); 0 for n = 1
};

MeanSE mean_and_se(const std::vector<double>& values);

/// sum_{t<T} (||x^a_t||^2 - ||x^c_t||^2) for one record.
double control_regret_sum(const TrajectoryRecord& record, long T);
/// 0.5 sum_{t<T} ||B_t Y_t (alpha_hat_t - alpha)||^2 for one record.
double prediction_regret_sum(const TrajectoryRecord& record, long T);

/// Aggregates over records; throws ConfigurationError on an empty list or a
/// record shorter than T.
MeanSE control_regret(const std::vector<TrajectoryRecord>& records, long T);
MeanSE prediction_regret(const std::vector<TrajectoryRecord>& records, long T);

/// A closed-form bound value. `applicable` is false when a hypothesis of the
/// result it comes from fails; the value is still evaluated and `note`
/// explains which hypothesis.
struct BoundValue {
  double value = 0.0;
  bool applicable = true;
  std::string note;
};

/// Constants shared by the stochastic regret bounds.
struct RegretConstants {
  IncrementalStabilityConstants iss;
  double Bx = 0.0;
  double D = 1.0;
  double M = 1.0;
  double W = 0.0;
  double G = 0.0;
  double lambda = 1.0;
  int p = 1;
};

/// B_x = beta ||x_0|| + gamma (2 D M^2 + W) / (1 - rho).
double compute_Bx(const IncrementalStabilityConstants& c, double x0_norm, double D, double M,
                  double W);

/// Fills G and B_x from the other fields.
RegretConstants make_regret_constants(const IncrementalStabilityConstants& c, double x0_norm,
                                      double D, double M, double W, double lambda, int p);

/// Q(x_0,0)/rho + 5 sqrt(lambda) D / rho + (3D/rho) sqrt(sum ||g_t||^2).
double bound_thm1(const LyapunovCertificate& cert, const Vector& x0, double gradient_sq_sum,
                  double lambda, double D);
/// Same, reading the gradient sum over t < T from a velocity-gradient record.
double bound_thm1(const LyapunovCertificate& cert, const TrajectoryRecord& record, long T,
                  double lambda, double D);

/// (3/2)(Q(x_0,0)/rho + 5 sqrt(lambda) D/rho) + (27 D^2/rho^2) M^4 L_Q^2 max{L_f^2, 2 rho/mu}.
double bound_thm2(const LyapunovCertificate& cert, const Vector& x0, double D, double lambda,
                  double M);

/// 2 B_x gamma / (1 - rho) sqrt(T) sqrt(sum ||B_t Y_t alpha_tilde_t||^2).
double bound_thm3(const IncrementalStabilityConstants& c, double Bx, long T,
                  double prediction_sq_sum);

/// 2 sqrt(6) B_x gamma/(1-rho) sqrt(G D) T^{3/4}.
BoundValue bound_cor1(const RegretConstants& c, long T);
/// 2 B_x gamma/(1-rho) sqrt(T) sqrt(4 D^2 (lambda + M^4) + p G^2 log(1 + M^4 T/lambda)); needs M >= 1.
BoundValue bound_cor2(const RegretConstants& c, long T);
/// Gradient descent with a k-step input delay.
BoundValue bound_thm4(const RegretConstants& c, long T, int k);
/// Online Newton with a k-step input delay; needs M >= 1.
BoundValue bound_thm5(const RegretConstants& c, long T, int k);

/// 3 G D sqrt(T).
double bound_oco_gd(double G, double D, long T);
/// 2 D^2/eta (lambda + M^2) + (eta p / 2)(D M + Y)^2 log(1 + M^2 T/lambda); needs eta >= 1.
BoundValue bound_oco_newton(double D, double eta, double lambda, double M, double Y_bound, int p,
                            long T);

struct RegretExperiment {
  SystemModel model;
  Vector x0;
  LawConfig law;
  NoiseSpec noise;  // `seed` is the master seed
  std::vector<long> horizons;
  int n_rollouts = 64;
  std::optional<int> delay;
  int jobs = 0;  // 0 = all hardware threads (capped by ADAPTREG_MAX_JOBS)
  // Constants for bound evaluation; bounds needing absent ones are skipped.
  std::optional<IncrementalStabilityConstants> iss;
  std::optional<LyapunovCertificate> lyapunov;
  bool keep_records = false;
  bool keep_estimates = false;
};

struct RegretReport {
  std::vector<long> horizons;
  std::vector<MeanSE> control;
  std::vector<MeanSE> prediction;
  // raw[r][h]: per-rollout sums at horizons[h], rollouts ordered by seed index.
  std::vector<std::vector<double>> control_raw;
  std::vector<std::vector<double>> prediction_raw;
  std::map<std::string, std::vector<BoundValue>> bounds;  // bound id -> value per horizon
  int n_rollouts = 0;
  std::vector<std::uint64_t> seeds;
  std::optional<RegretConstants> constants;
  std::vector<TrajectoryRecord> records;  // only with keep_records
  double runtime_seconds = 0.0;
};

/// Runs n coupled rollouts at the largest horizon with per-rollout seeds
/// expand_seed(master, i), then reads every requested horizon off prefix
/// sums of the same records and attaches the applicable bounds.
RegretReport run_regret_experiment(const RegretExperiment& experiment);

/// Least-squares slope of log(y) against log(x); nullopt when some y <= 0.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace adaptreg
