#include "adaptreg/dynamics.hpp"

#include "adaptreg/adapt.hpp"
#include "adaptreg/linalg.hpp"

#include <cmath>

namespace adaptreg {
namespace {

constexpr double kProbeTolerance = 1e-9;

void check_dims(const SystemModel& model, const Vector& x, const Vector& noise) {
  if (x.size() != model.state_dim)
    throw ConfigurationError("state has dimension " + std::to_string(x.size()) + ", model expects " +
                             std::to_string(model.state_dim));
  if (noise.size() != model.state_dim)
    throw ConfigurationError("noise has dimension " + std::to_string(noise.size()) +
                             ", model expects " + std::to_string(model.state_dim));
}

void check_estimate(const SystemModel& model, const Vector& estimate) {
  if (estimate.size() != model.param_dim)
    throw ConfigurationError("estimate has dimension " + std::to_string(estimate.size()) +
                             ", model expects " + std::to_string(model.param_dim));
  if (estimate.norm() > model.param_radius * (1.0 + 1e-12) + 1e-12)
    throw ConfigurationError("estimate norm exceeds the parameter radius");
}

Matrix eval_input_matrix(const SystemModel& model, const Vector& x, long t) {
  Matrix B = model.input_matrix(x, t);
  if (B.rows() != model.state_dim || B.cols() != model.input_dim)
    throw ConfigurationError("input matrix has the wrong shape");
  return B;
}

Matrix eval_basis(const SystemModel& model, const Vector& x, long t) {
  Matrix Y = model.basis(x, t);
  if (Y.rows() != model.input_dim || Y.cols() != model.param_dim)
    throw ConfigurationError("basis has the wrong shape");
  return Y;
}

// f(x,t) + B(x,t)(u - Y(x,t) alpha) + w (+ residual): the true plant driven
// by the applied input u.
Vector advance(const SystemModel& model, const Vector& x, long t, const Vector& u,
               const Vector& noise) {
  const Matrix B = eval_input_matrix(model, x, t);
  const Matrix Y = eval_basis(model, x, t);
  Vector next = model.nominal(x, t) + B * (u - Y * model.true_param) + noise;
  if (model.residual) next += model.residual(x, t, u);
  if (!next.allFinite()) throw NumericalDivergence("adaptive", t, "non-finite state");
  return next;
}

}  // namespace

ModelCheck validate_model(const SystemModel& model, const std::vector<Vector>& probe_states,
                          const std::vector<long>& probe_times) {
  ModelCheck check;
  auto fail = [&](const std::string& msg) {
    check.pass = false;
    check.failures.push_back(msg);
  };
  if (model.state_dim <= 0 || model.input_dim <= 0 || model.param_dim <= 0) {
    fail("dimensions must be positive");
    return check;
  }
  if (!model.nominal || !model.input_matrix || !model.basis) {
    fail("nominal, input matrix and basis must all be set");
    return check;
  }
  if (model.true_param.size() != model.param_dim) {
    fail("true parameter has the wrong dimension");
    return check;
  }
  check.param_norm = model.true_param.norm();
  if (check.param_norm > model.param_radius + kProbeTolerance)
    fail("true parameter lies outside the parameter ball");

  const Vector zero = Vector::Zero(model.state_dim);
  for (long t : probe_times) {
    const double err = model.nominal(zero, t).norm();
    check.max_fixed_point_error = std::max(check.max_fixed_point_error, err);
  }
  if (check.max_fixed_point_error > kProbeTolerance) fail("f(0, t) is not zero");

  for (const Vector& x : probe_states) {
    for (long t : probe_times) {
      check.max_input_matrix_norm =
          std::max(check.max_input_matrix_norm, spectral_norm(model.input_matrix(x, t)));
      check.max_basis_norm = std::max(check.max_basis_norm, spectral_norm(model.basis(x, t)));
    }
  }
  if (check.max_input_matrix_norm > model.op_norm_bound + kProbeTolerance)
    fail("||B|| exceeds M at a probe point");
  if (check.max_basis_norm > model.op_norm_bound + kProbeTolerance)
    fail("||Y|| exceeds M at a probe point");
  return check;
}

std::optional<double> NoiseSpec::almost_sure_bound() const {
  switch (kind) {
    case NoiseKind::zero:
      return 0.0;
    case NoiseKind::bounded_uniform_ball:
      return bound;
    case NoiseKind::scaled_gaussian:
      return std::nullopt;
  }
  return std::nullopt;
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::zero:
      return "zero";
    case NoiseKind::bounded_uniform_ball:
      return "bounded_uniform_ball";
    case NoiseKind::scaled_gaussian:
      return "scaled_gaussian";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "zero") return NoiseKind::zero;
  if (name == "bounded_uniform_ball") return NoiseKind::bounded_uniform_ball;
  if (name == "scaled_gaussian") return NoiseKind::scaled_gaussian;
  throw ConfigurationError("unknown noise kind '" + name + "'");
}

NoiseGenerator::NoiseGenerator(const NoiseSpec& spec, int dim)
    : spec_(spec), dim_(dim), engine_(spec.seed) {
  if (dim <= 0) throw ConfigurationError("noise dimension must be positive");
  if (spec.kind == NoiseKind::bounded_uniform_ball && !(spec.bound >= 0.0))
    throw ConfigurationError("noise bound W must be nonnegative");
  if (spec.kind == NoiseKind::scaled_gaussian && !(spec.gaussian_scale >= 0.0 && spec.step > 0.0))
    throw ConfigurationError("gaussian noise needs sigma >= 0 and tau > 0");
}

Vector NoiseGenerator::next() {
  Vector w = Vector::Zero(dim_);
  switch (spec_.kind) {
    case NoiseKind::zero:
      break;
    case NoiseKind::bounded_uniform_ball: {
      for (int i = 0; i < dim_; ++i) w(i) = normal_(engine_);
      const double n = w.norm();
      const double radius = spec_.bound * std::pow(uniform_(engine_), 1.0 / dim_);
      if (n > 0.0) w *= radius / n;
      break;
    }
    case NoiseKind::scaled_gaussian: {
      const double scale = std::sqrt(spec_.step) * spec_.gaussian_scale;
      for (int i = 0; i < dim_; ++i) w(i) = scale * normal_(engine_);
      break;
    }
  }
  return w;
}

DelayBuffer::DelayBuffer(int delay, int input_dim) : delay_(delay) {
  if (delay < 0) throw ConfigurationError("delay must be nonnegative");
  if (input_dim <= 0) throw ConfigurationError("input dimension must be positive");
  for (int i = 0; i < delay; ++i) queue_.push_back(Vector::Zero(input_dim));
}

Vector DelayBuffer::exchange(const Vector& newest) {
  if (delay_ == 0) return newest;
  queue_.push_back(newest);
  Vector head = std::move(queue_.front());
  queue_.pop_front();
  return head;
}

Vector step_adaptive(const SystemModel& model, const Vector& x, long t, const Vector& estimate,
                     const Vector& noise) {
  check_dims(model, x, noise);
  check_estimate(model, estimate);
  const Vector u = eval_basis(model, x, t) * estimate;
  return advance(model, x, t, u, noise);
}

Vector step_comparator(const SystemModel& model, const Vector& x, long t, const Vector& noise) {
  check_dims(model, x, noise);
  Vector next = model.nominal(x, t) + noise;
  if (!next.allFinite()) throw NumericalDivergence("comparator", t, "non-finite state");
  return next;
}

DelayedStep step_delayed(const SystemModel& model, const Vector& x, long t, DelayBuffer& buffer,
                         const Vector& estimate, const Vector& noise) {
  check_dims(model, x, noise);
  check_estimate(model, estimate);
  if (buffer.delay() > 0 && model.y_state_dependent)
    throw UnsupportedConfiguration(
        "a delayed input requires a state-independent basis Y(t); model '" + model.name +
        "' has a state-dependent one");
  const Vector u = eval_basis(model, x, t + buffer.delay()) * estimate;
  Vector applied = buffer.exchange(u);
  Vector next = advance(model, x, t, applied, noise);
  return {std::move(next), std::move(applied)};
}

TrajectoryRecord rollout_coupled(const SystemModel& model, const Vector& x0, long horizon,
                                 const AdaptationLaw& law_template, const NoiseSpec& noise,
                                 std::optional<int> delay, const RolloutOptions& options) {
  if (horizon < 1) throw ConfigurationError("horizon must be at least 1");
  if (x0.size() != model.state_dim || !x0.allFinite())
    throw ConfigurationError("initial state must be finite with dimension " +
                             std::to_string(model.state_dim));

  std::unique_ptr<AdaptationLaw> law = law_template.clone();
  NoiseGenerator gen(noise, model.state_dim);
  std::optional<DelayBuffer> buffer;
  if (delay) buffer.emplace(*delay, model.input_dim);

  TrajectoryRecord rec;
  rec.horizon = horizon;
  rec.seed = noise.seed;
  rec.law = to_string(law->kind());
  rec.delay = delay.value_or(0);
  const long n = model.state_dim;
  rec.states_adaptive.resize(n, horizon + 1);
  rec.states_comparator.resize(n, horizon + 1);
  rec.inputs.resize(model.input_dim, horizon);
  rec.noises.resize(n, horizon);
  if (options.keep_estimates) rec.estimates.resize(model.param_dim, horizon + 1);
  rec.estimate_norms.resize(horizon + 1);
  rec.param_errors.resize(horizon + 1);
  rec.prediction_errors.resize(horizon);
  rec.gradient_sq.resize(horizon);
  rec.residual_norms = Vector::Zero(horizon);

  Vector xa = x0;
  Vector xc = x0;
  rec.states_adaptive.col(0) = xa;
  rec.states_comparator.col(0) = xc;
  auto log_estimate = [&](long t) {
    const Vector& a = law->estimate();
    if (options.keep_estimates) rec.estimates.col(t) = a;
    rec.estimate_norms(t) = a.norm();
    rec.param_errors(t) = (a - model.true_param).norm();
  };
  log_estimate(0);

  for (long t = 0; t < horizon; ++t) {
    const Vector w = gen.next();
    rec.noises.col(t) = w;

    Vector xc_next = step_comparator(model, xc, t, w);
    if (xc_next.norm() > options.divergence_threshold)
      throw NumericalDivergence("comparator", t + 1, "state norm exceeded the divergence threshold");

    const Vector& estimate = law->estimate();
    const Matrix B = eval_input_matrix(model, xa, t);
    const Matrix Y = eval_basis(model, xa, t);
    rec.prediction_errors(t) = (B * (Y * (estimate - model.true_param))).norm();

    Vector xa_next;
    Vector applied;
    bool diverged = false;
    try {
      if (buffer) {
        DelayedStep step = step_delayed(model, xa, t, *buffer, estimate, w);
        xa_next = std::move(step.next_state);
        applied = std::move(step.applied_input);
      } else {
        applied = Y * estimate;
        xa_next = advance(model, xa, t, applied, w);
      }
      diverged = xa_next.norm() > options.divergence_threshold;
    } catch (const NumericalDivergence&) {
      diverged = true;
    }

    if (diverged) {
      // Truncate to the steps completed; the record stays self-consistent.
      rec.divergent = true;
      rec.divergence_step = t + 1;
      rec.horizon = t;
      rec.states_adaptive.conservativeResize(Eigen::NoChange, t + 1);
      rec.states_comparator.conservativeResize(Eigen::NoChange, t + 1);
      rec.inputs.conservativeResize(Eigen::NoChange, t);
      rec.noises.conservativeResize(Eigen::NoChange, t);
      if (options.keep_estimates) rec.estimates.conservativeResize(Eigen::NoChange, t + 1);
      rec.estimate_norms.conservativeResize(t + 1);
      rec.param_errors.conservativeResize(t + 1);
      rec.prediction_errors.conservativeResize(t);
      rec.gradient_sq.conservativeResize(t);
      rec.residual_norms.conservativeResize(t);
      return rec;
    }

    if (model.residual) rec.residual_norms(t) = model.residual(xa, t, applied).norm();
    rec.inputs.col(t) = applied;
    rec.gradient_sq(t) = law->update(model, Observation{xa, xa_next, t, applied});

    xa = std::move(xa_next);
    xc = std::move(xc_next);
    rec.states_adaptive.col(t + 1) = xa;
    rec.states_comparator.col(t + 1) = xc;
    log_estimate(t + 1);
  }
  return rec;
}

}  // namespace adaptreg
