#pragma once

#include "adaptreg/dynamics.hpp"
#include "adaptreg/stability.hpp"
#include "adaptreg/types.hpp"

#include <memory>
#include <optional>
#include <string>

namespace adaptreg {

/// Euclidean projection onto the ball of radius D.
Vector project_ball(const Vector& x, double D);

/// argmin_{||y|| <= D} (x - y)' A (x - y) for symmetric positive definite A.
/// The solution is y = (A + nu I)^{-1} A x with nu >= 0 found by bisection.
/// Throws CertificateError when A is not positive definite.
Vector project_ball_weighted(const Vector& x, const Matrix& A, double D);

/// What a law sees after each step: x_t, the realized x_{t+1}, the time
/// index and the input actually applied at t.
struct Observation {
  const Vector& state;
  const Vector& next_state;
  long t;
  const Vector& applied_input;
};

/// Y_t' B_t' (x_{t+1} - f(x_t,t) - B_t (u_t - Y_t alpha_hat_t)): the gradient
/// at alpha_hat_t of the loss 0.5 ||B_t Y_t alpha - (f + B_t u_t - x_{t+1})||^2,
/// computed from observables only. Equals Y_t' B_t' (x_{t+1} - f) when
/// u_t = Y_t alpha_hat_t.
Vector prediction_gradient(const SystemModel& model, const Observation& obs,
                           const Vector& estimate);

// Per-law mutable states. Each update mutates the state in place and returns
// the squared norm of the gradient it stepped along.

struct VGState {
  Vector estimate;
  double grad_norm_accum = 1.0;  // lambda + sum of ||g_i||^2 up to the current step
  double regularizer = 1.0;      // lambda
  double radius = 1.0;           // D
  std::function<Vector(const Vector& x, long t)> lyapunov_gradient;
};

/// g = Y(x_t,t)' B(x_t,t)' grad Q(x_{t+1}, t+1); the accumulator absorbs
/// ||g||^2 before the rate D / sqrt(accumulator) is formed.
double vg_update(VGState& state, const SystemModel& model, const Vector& x_t,
                 const Vector& x_next, long t);

struct OGDState {
  Vector estimate;
  double radius = 1.0;        // D
  double gradient_bound = 1.0;  // G
  double observed_gradient_sup = 0.0;
  long updates = 0;
};

/// Step size D / (G sqrt(t + 1)) along prediction_gradient, then projection.
double ogd_update(OGDState& state, const SystemModel& model, const Observation& obs);

struct NewtonState {
  Vector estimate;
  Matrix info;          // A = lambda I + sum M_s' M_s
  Matrix info_inverse;  // kept current by Woodbury corrections
  double ridge = 1.0;   // lambda
  double step = 1.0;    // eta >= 1
  double radius = 1.0;  // D
  long updates = 0;
  long refreshes = 0;
  Vector probe;  // fixed direction for the cheap inverse-drift probe
};

NewtonState make_newton_state(int param_dim, double ridge, double step, double radius,
                              const Vector& initial);

/// A <- A + M'M (M = B_t Y_t), Woodbury correction of A^{-1}, then
/// alpha <- Pi_{C,A}[alpha - eta A^{-1} grad]. The inverse is recomputed
/// from A every 512 updates and whenever a probe detects drift above 1e-6.
double newton_update(NewtonState& state, const SystemModel& model, const Observation& obs);

/// Frobenius norm of A A^{-1} - I.
double inverse_drift(const NewtonState& state);

struct RLSState {
  Vector estimate;     // projected
  Vector unprojected;  // V^{-1} moment
  Matrix info;         // V = lambda I + sum M'M
  Matrix info_inverse;
  Vector moment;       // sum M' phi
  double ridge = 1.0;
  double radius = 1.0;
  long updates = 0;
};

RLSState make_rls_state(int param_dim, double ridge, double radius);

/// Regularized least squares on phi_t = f(x_t,t) + B_t u_t - x_{t+1}, whose
/// regression target is B_t Y_t alpha - w_t; the estimate is projected onto
/// the ball. Throws NumericalError when the solve residual stays above 1e-8.
double rls_update(RLSState& state, const SystemModel& model, const Observation& obs);

enum class LawKind { frozen, vg, ogd, newton, rls };

std::string to_string(LawKind kind);
LawKind law_kind_from_string(const std::string& name);

/// Polymorphic handle so rollouts can run any law.
class AdaptationLaw {
 public:
  virtual ~AdaptationLaw() = default;
  virtual LawKind kind() const = 0;
  virtual const Vector& estimate() const = 0;
  virtual double update(const SystemModel& model, const Observation& obs) = 0;
  virtual std::unique_ptr<AdaptationLaw> clone() const = 0;
};

class FrozenLaw final : public AdaptationLaw {
 public:
  explicit FrozenLaw(Vector estimate) : estimate_(std::move(estimate)) {}
  LawKind kind() const override { return LawKind::frozen; }
  const Vector& estimate() const override { return estimate_; }
  double update(const SystemModel&, const Observation&) override { return 0.0; }
  std::unique_ptr<AdaptationLaw> clone() const override {
    return std::make_unique<FrozenLaw>(*this);
  }

 private:
  Vector estimate_;
};

template <typename State, LawKind Kind, double (*Update)(State&, const SystemModel&,
                                                         const Observation&)>
class StatefulLaw final : public AdaptationLaw {
 public:
  explicit StatefulLaw(State state) : state_(std::move(state)) {}
  LawKind kind() const override { return Kind; }
  const Vector& estimate() const override { return state_.estimate; }
  double update(const SystemModel& model, const Observation& obs) override {
    return Update(state_, model, obs);
  }
  std::unique_ptr<AdaptationLaw> clone() const override {
    return std::make_unique<StatefulLaw>(*this);
  }
  const State& state() const { return state_; }

 private:
  State state_;
};

double vg_observe(VGState& state, const SystemModel& model, const Observation& obs);

using VGLaw = StatefulLaw<VGState, LawKind::vg, &vg_observe>;
using OGDLaw = StatefulLaw<OGDState, LawKind::ogd, &ogd_update>;
using NewtonLaw = StatefulLaw<NewtonState, LawKind::newton, &newton_update>;
using RLSLaw = StatefulLaw<RLSState, LawKind::rls, &rls_update>;

/// Everything needed to construct a law. Unset constants are filled from
/// the model (D, M) and the noise bound (W) where the law needs them.
struct LawConfig {
  LawKind kind = LawKind::ogd;
  std::optional<double> radius;          // D
  double regularizer = 1.0;              // lambda
  double newton_step = 1.0;              // eta
  std::optional<double> gradient_bound;  // G
  std::optional<double> noise_bound;     // W
  std::optional<Vector> initial;         // alpha_hat_0, zero by default
  std::function<Vector(const Vector& x, long t)> lyapunov_gradient;  // vg only
};

/// G = M^2 (2 D M^2 + W), the bound on the prediction-loss gradient.
double gradient_bound(double D, double M, double W);

std::unique_ptr<AdaptationLaw> make_law(const LawConfig& config, const SystemModel& model);

}  // namespace adaptreg
