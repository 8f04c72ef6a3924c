#include "adaptreg/bench.hpp"

#include "adaptreg/linalg.hpp"
#include "adaptreg/parallel.hpp"
#include "adaptreg/random.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace adaptreg {
namespace {

constexpr double kPi = 3.14159265358979323846;

double spectral_radius(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Central differences of the RK4 step around (x, u).
void linearize_step(const CartpoleParams& p, const Vector& x, double u, Matrix& A, Vector& b) {
  const double h = 1e-6;
  A.resize(4, 4);
  for (int i = 0; i < 4; ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    A.col(i) = (cartpole_rk4_step(p, xp, u) - cartpole_rk4_step(p, xm, u)) / (2.0 * h);
  }
  b = (cartpole_rk4_step(p, x, u + h) - cartpole_rk4_step(p, x, u - h)) / (2.0 * h);
}

double row_times(const Matrix& K, const Vector& x) { return (K * x)(0); }

}  // namespace

Vector cartpole_continuous(const CartpoleParams& p, const Vector& x, double u) {
  const double th = x(2), thd = x(3);
  const double s = std::sin(th), c = std::cos(th);
  const double den = p.cart_mass + p.pole_mass * s * s;
  Vector dx(4);
  dx(0) = x(1);
  dx(1) = (u + p.pole_mass * s * (p.pole_length * thd * thd + p.gravity * c)) / den;
  dx(2) = thd;
  dx(3) = (-u * c - p.pole_mass * p.pole_length * thd * thd * c * s -
           (p.cart_mass + p.pole_mass) * p.gravity * s) /
          (p.pole_length * den);
  return dx;
}

Vector cartpole_rk4_step(const CartpoleParams& p, const Vector& x, double u) {
  const double h = p.dt;
  const Vector k1 = cartpole_continuous(p, x, u);
  const Vector k2 = cartpole_continuous(p, x + 0.5 * h * k1, u);
  const Vector k3 = cartpole_continuous(p, x + 0.5 * h * k2, u);
  const Vector k4 = cartpole_continuous(p, x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector cartpole_equilibrium() {
  Vector x(4);
  x << 0.0, 0.0, kPi, 0.0;
  return x;
}

LqrSolution discrete_lqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  const long n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols())
    throw ConfigurationError("LQR matrices have inconsistent dimensions");
  LqrSolution sol;
  Matrix P = Q;
  for (int it = 1; it <= 100000; ++it) {
    const Matrix BtP = B.transpose() * P;
    const Matrix S = R + BtP * B;
    const Matrix K = S.ldlt().solve(BtP * A);
    Matrix next = Q + A.transpose() * P * A - A.transpose() * P * B * K;
    next = 0.5 * (next + next.transpose()).eval();
    // Max-abs norms: the Frobenius norm overflows to inf on a diverging P and
    // would make the relative test pass.
    const double change = (next - P).lpNorm<Eigen::Infinity>();
    P = std::move(next);
    if (!P.allFinite()) break;
    if (change <= 1e-12 * std::max(1.0, P.lpNorm<Eigen::Infinity>())) {
      sol.P = P;
      sol.K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
      sol.iterations = it;
      sol.residual = (P - (Q + A.transpose() * P * A - A.transpose() * P * B * sol.K)).norm();
      if (!std::isfinite(sol.residual) || sol.residual > 1e-9 * std::max(1.0, P.norm()))
        throw NumericalError("Riccati fixed point residual " + std::to_string(sol.residual));
      if (spectral_radius(A - B * sol.K) >= 1.0)
        throw NumericalError("LQR closed loop is not stable; (A, B) may not be stabilizable");
      return sol;
    }
  }
  throw NumericalError("Riccati iteration did not converge; (A, B) may not be stabilizable");
}

RandomFeatureBank::RandomFeatureBank(int count, int input_dim, std::uint64_t seed) {
  if (count < 1 || input_dim < 1) throw ConfigurationError("feature bank needs positive sizes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  frequencies_.resize(count, input_dim);
  phases_.resize(count);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < input_dim; ++j) frequencies_(i, j) = normal(rng);
    phases_(i) = phase(rng);
  }
}

Eigen::RowVectorXd RandomFeatureBank::operator()(const Vector& x) const {
  return (frequencies_ * x + phases_).array().cos().matrix().transpose();
}

CartpoleExperiment build_cartpole_experiment(const CartpoleSetup& setup) {
  CartpoleExperiment ex;
  const Vector xeq = cartpole_equilibrium();
  Vector b;
  linearize_step(setup.design, xeq, 0.0, ex.A_design, b);
  ex.B_design = b;
  ex.lqr = discrete_lqr(ex.A_design, ex.B_design, Matrix::Identity(4, 4),
                        Matrix::Constant(1, 1, 0.5));
  const Matrix K = ex.lqr.K;
  const Matrix P = ex.lqr.P;
  const Matrix Acl = ex.A_design - ex.B_design * K;
  ex.design_closed_loop_radius = spectral_radius(Acl);
  Matrix At;
  Vector bt;
  linearize_step(setup.truth, xeq, 0.0, At, bt);
  ex.true_closed_loop_radius = spectral_radius(At - bt * K);

  const CartpoleParams design = setup.design;
  const CartpoleParams truth = setup.truth;
  auto features = std::make_shared<RandomFeatureBank>(setup.features, 4, expand_seed(setup.seed, 0));

  NominalMap f = [design, K, xeq](const Vector& xb, long) -> Vector {
    return cartpole_rk4_step(design, xb + xeq, -row_times(K, xb)) - xeq;
  };
  MatrixMap Bmap = [design, K, xeq](const Vector& xb, long) -> Matrix {
    const double h = 1e-6;
    const double u = -row_times(K, xb);
    const Vector x = xb + xeq;
    return (cartpole_rk4_step(design, x, u + h) - cartpole_rk4_step(design, x, u - h)) / (2.0 * h);
  };
  MatrixMap Ymap = [features, xeq](const Vector& xb, long) -> Matrix {
    return (*features)(xb + xeq);
  };

  // Reference parameter: ridge fit of the one-step mismatch onto -B Y.
  const int p = setup.features;
  std::mt19937_64 rng(expand_seed(setup.seed, 1));
  std::uniform_real_distribution<double> box(-setup.fit_radius, setup.fit_radius);
  Matrix H = 1e-6 * Matrix::Identity(p, p);
  Vector rhs = Vector::Zero(p);
  double max_b = 0.0;
  for (int s = 0; s < setup.fit_samples; ++s) {
    Vector xb(4);
    for (int i = 0; i < 4; ++i) xb(i) = box(rng);
    const double u = -row_times(K, xb);
    const Vector mismatch =
        cartpole_rk4_step(truth, xb + xeq, u) - cartpole_rk4_step(design, xb + xeq, u);
    const Matrix BY = Bmap(xb, 0) * Ymap(xb, 0);
    H.noalias() += BY.transpose() * BY;
    rhs.noalias() -= BY.transpose() * mismatch;
    max_b = std::max(max_b, Bmap(xb, 0).norm());
  }
  Vector alpha = H.ldlt().solve(rhs);
  if (alpha.norm() > setup.radius) alpha *= setup.radius / alpha.norm();

  SystemModel& m = ex.model;
  m.name = "cartpole";
  m.state_dim = 4;
  m.input_dim = 1;
  m.param_dim = p;
  m.nominal = f;
  m.input_matrix = Bmap;
  m.basis = Ymap;
  m.true_param = alpha;
  m.param_radius = setup.radius;
  m.op_norm_bound = std::max(std::sqrt(static_cast<double>(p)), 2.0 * max_b);
  m.y_state_dependent = true;
  m.residual = [truth, K, xeq, f, Bmap, Ymap, alpha](const Vector& xb, long t,
                                                      const Vector& u) -> Vector {
    const Vector actual = cartpole_rk4_step(truth, xb + xeq, -row_times(K, xb) + u(0)) - xeq;
    const Matrix B = Bmap(xb, t);
    return actual - (f(xb, t) + B * (u - Ymap(xb, t) * alpha));
  };

  // Q = 0.5 xbar' P xbar: grad = P xbar, Hessian P. The decrease rate is
  // certified for the linearized design loop only.
  LyapunovCertificate& q = ex.lyapunov;
  q.value = [P](const Vector& xb, long) { return 0.5 * xb.dot(P * xb); };
  q.gradient = [P](const Vector& xb, long) -> Vector { return P * xb; };
  q.decrease_rate = min_eigenvalue(0.5 * (P - Acl.transpose() * P * Acl));
  q.strong_convexity = min_eigenvalue(P);
  q.grad_lipschitz = max_eigenvalue(P);
  q.nominal_lipschitz = spectral_norm(Acl);

  ex.law.kind = LawKind::vg;
  ex.law.radius = setup.radius;
  ex.law.regularizer = setup.regularizer;
  ex.law.lyapunov_gradient = q.gradient;
  return ex;
}

double average_cost(const TrajectoryRecord& record) {
  if (record.divergent || record.horizon < 1) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (long t = 1; t <= record.horizon; ++t) s += record.states_adaptive.col(t).squaredNorm();
  return s / static_cast<double>(record.horizon);
}

CartpoleStudy run_cartpole_study(const CartpoleStudyConfig& config) {
  if (config.n_trajectories < 1 || config.horizon < 1)
    throw ConfigurationError("cartpole study needs trajectories and a positive horizon");
  const auto started = std::chrono::steady_clock::now();
  const CartpoleExperiment ex = build_cartpole_experiment(config.setup);
  const std::unique_ptr<AdaptationLaw> adaptive = make_law(ex.law, ex.model);
  const FrozenLaw baseline(Vector::Zero(ex.model.param_dim));

  CartpoleStudy study;
  study.runs.resize(config.n_trajectories);
  std::mt19937_64 rng(expand_seed(config.setup.seed, 2));
  std::uniform_real_distribution<double> box(-config.initial_radius, config.initial_radius);
  for (CartpoleRun& run : study.runs) {
    run.initial.resize(4);
    for (int i = 0; i < 4; ++i) run.initial(i) = box(rng);
  }

  RolloutOptions opts;
  opts.keep_estimates = false;
  opts.divergence_threshold = config.divergence_threshold;
  parallel_for(study.runs.size(), resolve_jobs(config.jobs), [&](std::size_t i) {
    CartpoleRun& run = study.runs[i];
    const TrajectoryRecord rec =
        rollout_coupled(ex.model, run.initial, config.horizon, *adaptive, NoiseSpec::zero(),
                        std::nullopt, opts);
    run.divergent = rec.divergent;
    run.divergence_step = rec.divergence_step;
    run.cost = average_cost(rec);
    if (config.run_baseline) {
      const TrajectoryRecord base =
          rollout_coupled(ex.model, run.initial, config.baseline_horizon, baseline,
                          NoiseSpec::zero(), std::nullopt, opts);
      run.baseline_divergent = base.divergent;
      run.baseline_divergence_step = base.divergence_step;
      for (long t = 0; t <= base.horizon; ++t)
        run.baseline_max_norm = std::max(run.baseline_max_norm, base.states_adaptive.col(t).norm());
    }
  });

  long tenth = 0, one = 0, diverged = 0;
  for (const CartpoleRun& run : study.runs) {
    tenth += run.cost < 0.1;
    one += run.cost < 1.0;
    diverged += run.baseline_divergent;
  }
  const double n = static_cast<double>(study.runs.size());
  study.fraction_below_tenth = tenth / n;
  study.fraction_below_one = one / n;
  study.baseline_divergent_fraction = diverged / n;
  study.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return study;
}

Matrix limit_cycle_jacobian(double tau, const Vector& z) {
  const double x = z(0), y = z(1);
  const double r = std::hypot(x, y);
  Matrix J = Matrix::Identity(2, 2) * (1.0 - tau);
  J(0, 1) -= tau;
  J(1, 0) += tau;
  if (r > 0.0) {
    // d(z/r)/dz = (I - z z'/r^2)/r
    const double r3 = r * r * r;
    J(0, 0) += tau * (y * y) / r3;
    J(0, 1) += tau * (-x * y) / r3;
    J(1, 0) += tau * (-x * y) / r3;
    J(1, 1) += tau * (x * x) / r3;
  }
  return J;
}

LimitCycleExperiment build_limit_cycle_experiment(const LimitCycleParams& params) {
  if (params.features < 1) throw ConfigurationError("feature count must be at least 1");
  if (!(params.tau > 0.0) || !(params.sigma >= 0.0))
    throw ConfigurationError("tau must be positive and sigma nonnegative");
  if (!(params.alpha_norm <= params.radius))
    throw ConfigurationError("||alpha|| must not exceed D");
  LimitCycleExperiment ex;
  const int p = params.features;
  const double tau = params.tau;

  std::mt19937_64 rng(expand_seed(params.seed, 0));
  std::uniform_real_distribution<double> freq(0.0, 2.0 * kPi);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector omega(p);
  for (int i = 0; i < p; ++i) omega(i) = freq(rng);
  Vector alpha(p);
  for (int i = 0; i < p; ++i) alpha(i) = normal(rng);
  alpha *= params.alpha_norm / alpha.norm();
  ex.frequencies = omega;

  NominalMap f = [tau](const Vector& z, long) -> Vector {
    const double x = z(0), y = z(1);
    const double r = std::hypot(x, y);
    const double cx = r > 0.0 ? x / r : 0.0;
    const double cy = r > 0.0 ? y / r : 0.0;
    Vector next(2);
    next(0) = x + tau * (-y + cx - x);
    next(1) = y + tau * (x + cy - y);
    return next;
  };
  const bool fixed_path = params.state_independent;
  MatrixMap Y = [omega, tau, fixed_path](const Vector& z, long t) -> Matrix {
    const double s = std::sin(tau * static_cast<double>(t));
    const double zx = fixed_path ? std::cos(tau * t) : z(0);
    const double zy = fixed_path ? std::sin(tau * t) : z(1);
    Matrix out(2, omega.size());
    out.row(0) = (omega * (zx + s)).array().sin().matrix().transpose();
    out.row(1) = (omega * (zy + s)).array().sin().matrix().transpose();
    return tau * out;
  };

  SystemModel& m = ex.model;
  m.name = fixed_path ? "limit_cycle_time_basis" : "limit_cycle";
  m.state_dim = 2;
  m.input_dim = 2;
  m.param_dim = p;
  m.nominal = f;
  m.input_matrix = [](const Vector&, long) -> Matrix { return Matrix::Identity(2, 2); };
  m.basis = Y;
  m.true_param = alpha;
  m.param_radius = params.radius;
  m.op_norm_bound = std::max(1.0, tau * std::sqrt(2.0 * p));
  m.y_state_dependent = !fixed_path;

  // Polar metric M = e_r e_r' + e_theta e_theta' / r^2; on 0.5 <= r <= 2 its
  // eigenvalues lie in [1/4, 4]. The rate is established for the radial
  // direction only (the phase direction is neutral).
  ContractionCertificate& c = ex.contraction;
  c.metric = [](const Vector& z, long) -> Matrix {
    const double r2 = std::max(z.squaredNorm(), 1e-300);
    Vector er = z / std::sqrt(r2);
    Vector et(2);
    et << -er(1), er(0);
    return er * er.transpose() + et * et.transpose() / r2;
  };
  c.rate = 0.906;  // grid sup on the annulus is 0.90506, attained at r = 0.5
  c.metric_lower = 0.25;
  c.metric_upper = 4.0;
  c.metric_lipschitz = 16.0;  // |d(1/r^2)/dr| = 2/r^3 at r = 0.5
  c.jacobian_bound = 1.0 + 2.0 * tau / 0.5;
  c.region = "annulus 0.5 <= r <= 2";
  ex.radial = [](const Vector& z, long) -> Matrix {
    const double r = z.norm();
    Matrix v(2, 1);
    if (r > 0.0) {
      v(0, 0) = z(0) / r;
      v(1, 0) = z(1) / r;
    } else {
      v << 1.0, 0.0;
    }
    return v;
  };

  ex.x0 = Vector(2);
  ex.x0 << 1.5, 0.0;
  ex.gaussian_noise = NoiseSpec::gaussian(params.sigma, tau, params.seed);
  ex.ogd.kind = LawKind::ogd;
  ex.ogd.radius = params.radius;
  ex.newton.kind = LawKind::newton;
  ex.newton.radius = params.radius;
  ex.newton.regularizer = 1.0;
  ex.newton.newton_step = 1.0;
  return ex;
}

SampleGrid annulus_grid(double rmin, double rmax, int n_radii, int n_angles) {
  SampleGrid g;
  for (int i = 0; i < n_radii; ++i) {
    const double r = n_radii == 1 ? rmin : rmin + (rmax - rmin) * i / (n_radii - 1);
    for (int j = 0; j < n_angles; ++j) {
      const double th = 2.0 * kPi * j / n_angles;
      Vector z(2);
      z << r * std::cos(th), r * std::sin(th);
      g.states.push_back(z);
    }
  }
  g.times = {0};
  g.region = "annulus " + std::to_string(rmin) + " <= r <= " + std::to_string(rmax) + ", " +
             std::to_string(n_radii) + "x" + std::to_string(n_angles) + " polar grid";
  return g;
}

ScalarSuite build_scalar_suite() {
  ScalarSuite s;
  SystemModel& m = s.model;
  m.name = "scalar";
  m.state_dim = m.input_dim = m.param_dim = 1;
  m.nominal = [](const Vector& x, long) -> Vector { return 0.5 * x; };
  m.input_matrix = [](const Vector&, long) -> Matrix { return Matrix::Identity(1, 1); };
  m.basis = [](const Vector&, long) -> Matrix { return Matrix::Identity(1, 1); };
  m.true_param = Vector::Ones(1);
  m.param_radius = 1.0;
  m.op_norm_bound = 1.0;
  m.y_state_dependent = false;

  s.lyapunov.value = [](const Vector& x, long) { return x.squaredNorm(); };
  s.lyapunov.gradient = [](const Vector& x, long) -> Vector { return 2.0 * x; };
  s.lyapunov.decrease_rate = 0.75;
  s.lyapunov.strong_convexity = 2.0;
  s.lyapunov.grad_lipschitz = 2.0;
  s.lyapunov.nominal_lipschitz = 0.5;

  s.contraction.metric = [](const Vector&, long) -> Matrix { return Matrix::Identity(1, 1); };
  s.contraction.rate = 0.25;
  s.contraction.metric_lower = 1.0;
  s.contraction.metric_upper = 1.0;
  s.contraction.metric_lipschitz = 0.0;
  s.contraction.jacobian_bound = 0.5;
  s.contraction.region = "all of R";
  return s;
}

ContinuousPlant decay_plant() {
  ContinuousPlant p;
  p.state_dim = 1;
  p.field = [](const Vector& x, const Vector& u, double) -> Vector { return -x + u; };
  p.policy = [](const Vector&, double) -> Vector { return Vector::Zero(1); };
  p.Lf = 1.0;
  p.Lpi = 1.0;
  return p;
}

ContinuousPlant planar_plant() {
  ContinuousPlant p;
  p.state_dim = 2;
  p.field = [](const Vector& x, const Vector& u, double) -> Vector {
    Vector d(2);
    d << -0.5 * x(0) + 0.5 * x(1), -0.5 * x(0) - 0.5 * x(1) + u(0);
    return d;
  };
  p.policy = [](const Vector& x, double) -> Vector { return Vector::Constant(1, -0.5 * x(1)); };
  p.Lf = 1.0;
  p.Lpi = 1.0;
  return p;
}

}  // namespace adaptreg
