#include "adaptreg/adapt.hpp"

#include "adaptreg/linalg.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace adaptreg {
namespace {

constexpr long kRefreshInterval = 512;
constexpr double kDriftTolerance = 1e-6;
constexpr double kSolveTolerance = 1e-8;

Matrix regressor(const SystemModel& model, const Vector& x, long t) {
  return model.input_matrix(x, t) * model.basis(x, t);
}

// Rank-n Woodbury correction of inv for inv^{-1} + M'M.
void woodbury_add(Matrix& inv, const Matrix& M) {
  const Matrix K = inv * M.transpose();  // p x n
  Matrix S = M * K;                      // n x n
  S.diagonal().array() += 1.0;
  const Eigen::LLT<Matrix> llt(S);
  inv.noalias() -= K * llt.solve(K.transpose());
  inv = 0.5 * (inv + inv.transpose()).eval();
}

Matrix spd_inverse(const Matrix& A, const char* what) {
  const Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + " is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(A.rows(), A.cols()));
  return 0.5 * (inv + inv.transpose());
}

double probe_drift(const Matrix& A, const Matrix& inv, const Vector& probe) {
  return (A * (inv * probe) - probe).norm() / probe.norm();
}

Vector default_probe(int p) {
  Vector v(p);
  for (int i = 0; i < p; ++i) v(i) = std::cos(1.0 + 0.7 * i);
  return v;
}

void require_finite(const Vector& g, long t, const char* law) {
  if (!g.allFinite())
    throw NumericalError(std::string(law) + " gradient is not finite at step " + std::to_string(t));
}

}  // namespace

Vector project_ball(const Vector& x, double D) {
  const double n = x.norm();
  if (n <= D) return x;
  // Rounding can leave the scaled point a few ulps outside; shrink the
  // scale until it is inside so the projection is idempotent.
  double scale = D / n;
  while ((x * scale).norm() > D) scale = std::nextafter(scale, 0.0);
  return x * scale;
}

Vector project_ball_weighted(const Vector& x, const Matrix& A, double D) {
  if (A.rows() != A.cols() || A.rows() != x.size())
    throw ConfigurationError("weighted projection dimensions are inconsistent");
  const Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success || !A.isApprox(A.transpose(), 1e-10))
    throw CertificateError("projection weight is not symmetric positive definite");
  if (x.norm() <= D) return x;
  return minimize_quadratic_on_ball(A, A * x, D);
}

Vector prediction_gradient(const SystemModel& model, const Observation& obs,
                           const Vector& estimate) {
  const Matrix B = model.input_matrix(obs.state, obs.t);
  const Matrix Y = model.basis(obs.state, obs.t);
  const Vector innovation = obs.next_state - model.nominal(obs.state, obs.t) -
                            B * (obs.applied_input - Y * estimate);
  return Y.transpose() * (B.transpose() * innovation);
}

double vg_update(VGState& state, const SystemModel& model, const Vector& x_t,
                 const Vector& x_next, long t) {
  const Matrix B = model.input_matrix(x_t, t);
  const Matrix Y = model.basis(x_t, t);
  const Vector g = Y.transpose() * (B.transpose() * state.lyapunov_gradient(x_next, t + 1));
  require_finite(g, t, "velocity-gradient");
  const double g2 = g.squaredNorm();
  state.grad_norm_accum += g2;
  const double eta = state.radius / std::sqrt(state.grad_norm_accum);
  state.estimate = project_ball(state.estimate - eta * g, state.radius);
  return g2;
}

double vg_observe(VGState& state, const SystemModel& model, const Observation& obs) {
  return vg_update(state, model, obs.state, obs.next_state, obs.t);
}

double ogd_update(OGDState& state, const SystemModel& model, const Observation& obs) {
  const Vector g = prediction_gradient(model, obs, state.estimate);
  require_finite(g, obs.t, "gradient-descent");
  const double gn = g.norm();
  state.observed_gradient_sup = std::max(state.observed_gradient_sup, gn);
  const double eta = state.radius / (state.gradient_bound * std::sqrt(obs.t + 1.0));
  state.estimate = project_ball(state.estimate - eta * g, state.radius);
  ++state.updates;
  return gn * gn;
}

NewtonState make_newton_state(int param_dim, double ridge, double step, double radius,
                              const Vector& initial) {
  if (!(ridge > 0.0)) throw ConfigurationError("lambda must be positive");
  if (!(step >= 1.0)) throw ConfigurationError("online Newton step eta must be >= 1");
  NewtonState s;
  s.estimate = initial;
  s.info = ridge * Matrix::Identity(param_dim, param_dim);
  s.info_inverse = Matrix::Identity(param_dim, param_dim) / ridge;
  s.ridge = ridge;
  s.step = step;
  s.radius = radius;
  s.probe = default_probe(param_dim);
  return s;
}

double newton_update(NewtonState& state, const SystemModel& model, const Observation& obs) {
  const Matrix M = regressor(model, obs.state, obs.t);
  const Vector g = prediction_gradient(model, obs, state.estimate);
  require_finite(g, obs.t, "online Newton");

  state.info.noalias() += M.transpose() * M;
  woodbury_add(state.info_inverse, M);
  ++state.updates;
  const bool scheduled = state.updates % kRefreshInterval == 0;
  if (scheduled || probe_drift(state.info, state.info_inverse, state.probe) > kDriftTolerance) {
    state.info_inverse = spd_inverse(state.info, "information matrix");
    ++state.refreshes;
    if (probe_drift(state.info, state.info_inverse, state.probe) > kDriftTolerance)
      throw NumericalError("information matrix inverse drifted at step " +
                           std::to_string(obs.t) + " and re-inversion did not repair it");
  }

  const Vector candidate = state.estimate - state.step * (state.info_inverse * g);
  // The weighted projection factors A; skip it when the step stays inside.
  state.estimate = candidate.norm() <= state.radius
                       ? candidate
                       : project_ball_weighted(candidate, state.info, state.radius);
  return g.squaredNorm();
}

double inverse_drift(const NewtonState& state) {
  const long p = state.info.rows();
  return (state.info * state.info_inverse - Matrix::Identity(p, p)).norm();
}

RLSState make_rls_state(int param_dim, double ridge, double radius) {
  if (!(ridge > 0.0)) throw ConfigurationError("lambda must be positive");
  RLSState s;
  s.estimate = Vector::Zero(param_dim);
  s.unprojected = Vector::Zero(param_dim);
  s.info = ridge * Matrix::Identity(param_dim, param_dim);
  s.info_inverse = Matrix::Identity(param_dim, param_dim) / ridge;
  s.moment = Vector::Zero(param_dim);
  s.ridge = ridge;
  s.radius = radius;
  return s;
}

double rls_update(RLSState& state, const SystemModel& model, const Observation& obs) {
  const Matrix B = model.input_matrix(obs.state, obs.t);
  const Matrix M = B * model.basis(obs.state, obs.t);
  const Vector phi =
      model.nominal(obs.state, obs.t) + B * obs.applied_input - obs.next_state;
  if (!phi.allFinite())
    throw NumericalError("least-squares target is not finite at step " + std::to_string(obs.t));
  const Vector g = M.transpose() * (M * state.estimate - phi);

  state.info.noalias() += M.transpose() * M;
  state.moment.noalias() += M.transpose() * phi;
  woodbury_add(state.info_inverse, M);
  ++state.updates;
  if (state.updates % kRefreshInterval == 0)
    state.info_inverse = spd_inverse(state.info, "least-squares information matrix");

  auto residual = [&] {
    return (state.info * state.unprojected - state.moment).norm() /
           std::max(1.0, state.moment.norm());
  };
  state.unprojected = state.info_inverse * state.moment;
  if (residual() > kSolveTolerance) {
    state.info_inverse = spd_inverse(state.info, "least-squares information matrix");
    state.unprojected = state.info.llt().solve(state.moment);
    if (residual() > kSolveTolerance)
      throw NumericalError("least-squares solve residual above 1e-8 at step " +
                           std::to_string(obs.t));
  }
  state.estimate = project_ball(state.unprojected, state.radius);
  return g.squaredNorm();
}

std::string to_string(LawKind kind) {
  switch (kind) {
    case LawKind::frozen:
      return "frozen";
    case LawKind::vg:
      return "vg";
    case LawKind::ogd:
      return "ogd";
    case LawKind::newton:
      return "newton";
    case LawKind::rls:
      return "rls";
  }
  return "unknown";
}

LawKind law_kind_from_string(const std::string& name) {
  if (name == "frozen") return LawKind::frozen;
  if (name == "vg") return LawKind::vg;
  if (name == "ogd") return LawKind::ogd;
  if (name == "newton") return LawKind::newton;
  if (name == "rls") return LawKind::rls;
  throw ConfigurationError("unknown law '" + name + "'");
}

double gradient_bound(double D, double M, double W) {
  return M * M * (2.0 * D * M * M + W);
}

std::unique_ptr<AdaptationLaw> make_law(const LawConfig& config, const SystemModel& model) {
  const double D = config.radius.value_or(model.param_radius);
  if (!(D > 0.0)) throw ConfigurationError("parameter radius D must be positive");
  Vector initial = config.initial.value_or(Vector::Zero(model.param_dim));
  if (initial.size() != model.param_dim)
    throw ConfigurationError("initial estimate has the wrong dimension");
  if (initial.norm() > D) throw ConfigurationError("initial estimate lies outside the ball");

  switch (config.kind) {
    case LawKind::frozen:
      return std::make_unique<FrozenLaw>(initial);
    case LawKind::vg: {
      if (!config.lyapunov_gradient)
        throw ConfigurationError("velocity-gradient law needs a Lyapunov gradient");
      if (!(config.regularizer > 0.0)) throw ConfigurationError("lambda must be positive");
      VGState s;
      s.estimate = initial;
      s.regularizer = config.regularizer;
      s.grad_norm_accum = config.regularizer;
      s.radius = D;
      s.lyapunov_gradient = config.lyapunov_gradient;
      return std::make_unique<VGLaw>(std::move(s));
    }
    case LawKind::ogd: {
      OGDState s;
      s.estimate = initial;
      s.radius = D;
      if (config.gradient_bound) {
        s.gradient_bound = *config.gradient_bound;
      } else if (config.noise_bound) {
        s.gradient_bound = gradient_bound(D, model.op_norm_bound, *config.noise_bound);
      } else {
        throw ConfigurationError("gradient descent needs G or the noise bound W to form G");
      }
      if (!(s.gradient_bound > 0.0)) throw ConfigurationError("G must be positive");
      return std::make_unique<OGDLaw>(std::move(s));
    }
    case LawKind::newton:
      return std::make_unique<NewtonLaw>(
          make_newton_state(model.param_dim, config.regularizer, config.newton_step, D, initial));
    case LawKind::rls: {
      RLSState s = make_rls_state(model.param_dim, config.regularizer, D);
      return std::make_unique<RLSLaw>(std::move(s));
    }
  }
  throw ConfigurationError("unknown law");
}

}  // namespace adaptreg
