#pragma once

#include "adaptreg/types.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace adaptreg {

class AdaptationLaw;

using NominalMap = std::function<Vector(const Vector& x, long t)>;
using MatrixMap = std::function<Matrix(const Vector& x, long t)>;
// Unmodeled dynamics added on top of the matched model; receives the
// applied input.
using ResidualMap = std::function<Vector(const Vector& x, long t, const Vector& u)>;

/// Discrete-time system with matched, linearly parameterized uncertainty:
///
///   x_{t+1} = f(x_t, t) + B(x_t, t) (u_t - Y(x_t, t) alpha) + w_t
///
/// `residual` is optional and only used by benchmarks whose true plant is not
/// exactly in the span of B Y (the cartpole study); it is reported, never
/// assumed zero.
struct SystemModel {
  int state_dim = 0;
  int input_dim = 0;
  int param_dim = 0;
  NominalMap nominal;
  MatrixMap input_matrix;
  MatrixMap basis;
  Vector true_param;
  double param_radius = 1.0;
  double op_norm_bound = 1.0;
  bool y_state_dependent = true;
  ResidualMap residual;
  std::string name;
};

struct ModelCheck {
  bool pass = true;
  double max_fixed_point_error = 0.0;
  double max_input_matrix_norm = 0.0;
  double max_basis_norm = 0.0;
  double param_norm = 0.0;
  std::vector<std::string> failures;
};

/// Checks f(0, t) = 0 on `probe_times`, ||alpha|| <= D and the operator norm
/// bounds on B and Y at every (state, time) probe (tolerance 1e-9).
ModelCheck validate_model(const SystemModel& model, const std::vector<Vector>& probe_states,
                          const std::vector<long>& probe_times);

enum class NoiseKind { zero, bounded_uniform_ball, scaled_gaussian };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::zero;
  double bound = 0.0;           // W, for the bounded kind
  double gaussian_scale = 0.0;  // sigma
  double step = 1.0;            // tau; gaussian draws are scaled by sqrt(tau) * sigma
  std::uint64_t seed = 0;

  static NoiseSpec zero() { return {}; }
  static NoiseSpec ball(double W, std::uint64_t seed = 0) {
    return {NoiseKind::bounded_uniform_ball, W, 0.0, 1.0, seed};
  }
  static NoiseSpec gaussian(double sigma, double tau, std::uint64_t seed = 0) {
    return {NoiseKind::scaled_gaussian, 0.0, sigma, tau, seed};
  }

  /// Almost-sure bound on ||w_t||, or nullopt for the unbounded kind.
  std::optional<double> almost_sure_bound() const;
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

/// Deterministic noise stream. Uniform-ball draws use a Gaussian direction
/// and radius W * U^{1/n}.
class NoiseGenerator {
 public:
  NoiseGenerator(const NoiseSpec& spec, int dim);
  Vector next();

 private:
  NoiseSpec spec_;
  int dim_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// FIFO transporting certainty-equivalence inputs through a k-step delay.
/// Seeded with zero inputs (the estimate is taken to be zero before t = 0).
class DelayBuffer {
 public:
  DelayBuffer(int delay, int input_dim);

  int delay() const { return delay_; }
  std::size_t size() const { return queue_.size(); }
  const std::deque<Vector>& contents() const { return queue_; }

  /// Pops the input applied now and pushes the freshly computed one. With a
  /// zero delay the pushed input is returned directly.
  Vector exchange(const Vector& newest);

 private:
  int delay_;
  std::deque<Vector> queue_;
};

/// One coupled rollout: the adaptive closed loop and the oracle comparator
/// driven by the same noise realization.
struct TrajectoryRecord {
  long horizon = 0;
  Matrix states_adaptive;    // n x (horizon + 1)
  Matrix states_comparator;  // n x (horizon + 1)
  Matrix inputs;             // d x horizon, the input actually applied
  Matrix noises;             // n x horizon
  Matrix estimates;          // p x (horizon + 1); empty when not kept
  Vector estimate_norms;     // horizon + 1
  Vector param_errors;       // ||alpha_hat_t - alpha||, horizon + 1
  Vector prediction_errors;  // ||B_t Y_t (alpha_hat_t - alpha)||, horizon
  Vector gradient_sq;        // squared norm of the law's update gradient, horizon
  Vector residual_norms;     // unmodeled residual norms (zero without residual)
  std::uint64_t seed = 0;
  std::string law;
  int delay = 0;
  bool divergent = false;
  long divergence_step = -1;
};

struct RolloutOptions {
  bool keep_estimates = true;
  double divergence_threshold = 1e6;
};

/// f(x,t) + B(x,t)(Y(x,t) alpha_hat - Y(x,t) alpha) + w (+ residual when the
/// model carries one).
Vector step_adaptive(const SystemModel& model, const Vector& x, long t, const Vector& estimate,
                     const Vector& noise);

/// f(x,t) + w.
Vector step_comparator(const SystemModel& model, const Vector& x, long t, const Vector& noise);

struct DelayedStep {
  Vector next_state;
  Vector applied_input;
};

/// Delayed-input system: applies the buffered input xi_t and enqueues
/// u_t = Y(t + k) alpha_hat_t. Requires a state-independent basis when k > 0.
DelayedStep step_delayed(const SystemModel& model, const Vector& x, long t, DelayBuffer& buffer,
                         const Vector& estimate, const Vector& noise);

/// Advances both trajectories for `horizon` steps with one noise stream.
/// The law (cloned from `law`) observes (x_t, x_{t+1}, t, applied input)
/// after every step. Adaptive divergence is recorded in the returned record;
/// comparator divergence throws NumericalDivergence.
TrajectoryRecord rollout_coupled(const SystemModel& model, const Vector& x0, long horizon,
                                 const AdaptationLaw& law, const NoiseSpec& noise,
                                 std::optional<int> delay = std::nullopt,
                                 const RolloutOptions& options = {});

}  // namespace adaptreg
