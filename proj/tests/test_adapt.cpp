#include "adaptreg/adapt.hpp"
#include "adaptreg/bench.hpp"
#include "adaptreg/linalg.hpp"
#include "adaptreg/regret.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace adaptreg {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

SystemModel scalar() { return build_scalar_suite().model; }

// Linear model x+ = B(u - Y alpha) with constant regressor, for the
// least-squares laws.
SystemModel constant_regressor(const Matrix& B, const Matrix& Y, const Vector& alpha, double D) {
  SystemModel m;
  m.state_dim = static_cast<int>(B.rows());
  m.input_dim = static_cast<int>(B.cols());
  m.param_dim = static_cast<int>(Y.cols());
  m.nominal = [](const Vector& x, long) -> Vector { return Vector::Zero(x.size()); };
  m.input_matrix = [B](const Vector&, long) { return B; };
  m.basis = [Y](const Vector&, long) { return Y; };
  m.true_param = alpha;
  m.param_radius = D;
  m.op_norm_bound = std::max(spectral_norm(B), spectral_norm(Y));
  m.y_state_dependent = false;
  return m;
}

TEST(ProjectBall, Examples) {
  EXPECT_EQ(project_ball(vec({3, 4}), 10.0), vec({3, 4}));
  const Vector p = project_ball(vec({3, 4}), 1.0);
  EXPECT_NEAR(p(0), 0.6, 1e-15);
  EXPECT_NEAR(p(1), 0.8, 1e-15);
  EXPECT_EQ(project_ball(Vector::Zero(2), 1.0), Vector::Zero(2));
}

TEST(ProjectBall, NormBoundAndIdempotence) {
  testing::Gen gen(1);
  for (int i = 0; i < 500; ++i) {
    const Vector x = gen.vector(gen.integer(1, 8), gen.real(0.0, 10.0));
    const double D = gen.real(0.1, 5.0);
    const Vector p = project_ball(x, D);
    EXPECT_LE(p.norm(), D + 1e-12);
    EXPECT_EQ(project_ball(p, D), p);
  }
}

TEST(ProjectBallWeighted, InteriorAndIdentity) {
  testing::Gen gen(2);
  const Matrix A = gen.spd(3);
  const Vector inside = vec({0.1, -0.2, 0.3});
  EXPECT_EQ(project_ball_weighted(inside, A, 1.0), inside);
  const Vector x = vec({3, 4, 0});
  EXPECT_LT((project_ball_weighted(x, Matrix::Identity(3, 3), 1.0) - project_ball(x, 1.0)).norm(),
            1e-12);
}

TEST(ProjectBallWeighted, DiagonalExampleMatchesGridSearch) {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 4.0;
  A(1, 1) = 1.0;
  const Vector x = vec({2, 0});
  const Vector y = project_ball_weighted(x, A, 1.0);
  EXPECT_NEAR(y(0), 1.0, 1e-10);
  EXPECT_NEAR(y(1), 0.0, 1e-10);

  // Dense polar grid over the unit disk.
  double best = std::numeric_limits<double>::infinity();
  Vector arg(2);
  for (int i = 0; i <= 400; ++i) {
    const double r = i / 400.0;
    for (int j = 0; j < 720; ++j) {
      const double th = 2.0 * M_PI * j / 720.0;
      const Vector z = vec({r * std::cos(th), r * std::sin(th)});
      const double v = (x - z).dot(A * (x - z));
      if (v < best) {
        best = v;
        arg = z;
      }
    }
  }
  EXPECT_LT((arg - y).norm(), 1e-2);
  EXPECT_LE((x - y).dot(A * (x - y)), best + 1e-12);
}

TEST(ProjectBallWeighted, RejectsNonSpd) {
  Matrix A = Matrix::Identity(2, 2);
  A(1, 1) = -0.5;
  EXPECT_THROW(project_ball_weighted(vec({2, 2}), A, 1.0), CertificateError);
}

TEST(ProjectBallWeighted, BeatsRandomFeasiblePoints) {
  testing::Gen gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = gen.integer(2, 5);
    const Matrix A = gen.spd(n, 0.05);
    const double D = gen.real(0.2, 2.0);
    const Vector x = gen.vector(n, 3.0);
    const Vector y = project_ball_weighted(x, A, D);
    ASSERT_LE(y.norm(), D + 1e-12);
    const double value = (x - y).dot(A * (x - y));
    for (int k = 0; k < 10000; ++k) {
      const Vector z = gen.in_ball(n, D);
      ASSERT_LE(value, (x - z).dot(A * (x - z)) + 1e-10);
    }
  }
}

TEST(VelocityGradient, ScalarHandStep) {
  const SystemModel m = scalar();
  VGState s;
  s.estimate = vec({0});
  s.grad_norm_accum = 1.0;
  s.regularizer = 1.0;
  s.radius = 1.0;
  s.lyapunov_gradient = [](const Vector& x, long) -> Vector { return 2.0 * x; };
  const double g2 = vg_update(s, m, vec({1}), vec({-0.5}), 0);
  EXPECT_DOUBLE_EQ(g2, 1.0);
  EXPECT_DOUBLE_EQ(s.grad_norm_accum, 2.0);
  EXPECT_NEAR(s.estimate(0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(VelocityGradient, ZeroGradientLeavesStateUnchanged) {
  const SystemModel m = scalar();
  VGState s;
  s.estimate = vec({0.3});
  s.grad_norm_accum = 1.5;
  s.radius = 1.0;
  s.lyapunov_gradient = [](const Vector& x, long) -> Vector { return 2.0 * x; };
  vg_update(s, m, vec({1}), vec({0}), 5);
  EXPECT_EQ(s.estimate(0), 0.3);
  EXPECT_EQ(s.grad_norm_accum, 1.5);
}

TEST(VelocityGradient, AccumulatorNondecreasingAndEstimateBounded) {
  const SystemModel m = scalar();
  LawConfig c;
  c.kind = LawKind::vg;
  c.lyapunov_gradient = [](const Vector& x, long) -> Vector { return 2.0 * x; };
  VGLaw law(static_cast<const VGLaw&>(*make_law(c, m)).state());
  NoiseGenerator noise(NoiseSpec::ball(0.5, 3), 1);
  Vector x = vec({2});
  double last = law.state().grad_norm_accum;
  for (long t = 0; t < 500; ++t) {
    const Vector u = m.basis(x, t) * law.estimate();
    const Vector next = step_adaptive(m, x, t, law.estimate(), noise.next());
    law.update(m, Observation{x, next, t, u});
    EXPECT_GE(law.state().grad_norm_accum, last);
    EXPECT_GE(law.state().grad_norm_accum, 1.0);
    EXPECT_LE(law.estimate().norm(), 1.0 + 1e-12);
    last = law.state().grad_norm_accum;
    x = next;
  }
}

TEST(GradientDescent, ScalarHandStep) {
  const SystemModel m = scalar();
  OGDState s;
  s.estimate = vec({0});
  s.radius = 1.0;
  s.gradient_bound = gradient_bound(1.0, 1.0, 0.0);
  ASSERT_EQ(s.gradient_bound, 2.0);
  const Vector u = vec({0});
  ogd_update(s, m, Observation{vec({1}), vec({-0.5}), 0, u});
  EXPECT_DOUBLE_EQ(s.estimate(0), 0.5);
}

TEST(GradientDescent, TrueEstimateIsAFixedPoint) {
  const SystemModel m = scalar();
  OGDState s;
  s.estimate = vec({1});
  s.radius = 1.0;
  s.gradient_bound = 2.0;
  const Vector x = vec({0.7});
  const Vector u = m.basis(x, 0) * s.estimate;
  const Vector next = step_adaptive(m, x, 0, s.estimate, vec({0}));
  EXPECT_EQ(ogd_update(s, m, Observation{x, next, 0, u}), 0.0);
  EXPECT_EQ(s.estimate(0), 1.0);
}

// Each step moves at most eta_t G, and over k steps at most D k / sqrt(t+1),
// as long as G bounds the realized gradients.
TEST(GradientDescent, IterateShiftBounds) {
  testing::Gen gen(4);
  const Matrix B = gen.matrix(3, 2, 0.4);
  const Matrix Y = gen.matrix(2, 4, 0.4);
  const double D = 1.5;
  Vector alpha = gen.vector(4);
  alpha *= 1.2 / alpha.norm();
  SystemModel m = constant_regressor(B, Y, alpha, D);
  const double W = 0.2;
  OGDState s;
  s.estimate = Vector::Zero(4);
  s.radius = D;
  s.gradient_bound = gradient_bound(D, m.op_norm_bound, W);
  NoiseGenerator noise(NoiseSpec::ball(W, 5), 3);
  std::vector<Vector> iterates{s.estimate};
  Vector x = Vector::Zero(3);
  for (long t = 0; t < 2000; ++t) {
    const Vector u = Y * s.estimate;
    const Vector next = step_adaptive(m, x, t, s.estimate, noise.next());
    const Vector before = s.estimate;
    ogd_update(s, m, Observation{x, next, t, u});
    const double eta = D / (s.gradient_bound * std::sqrt(t + 1.0));
    ASSERT_LE((s.estimate - before).norm(), eta * s.gradient_bound * (1.0 + 1e-12));
    iterates.push_back(s.estimate);
    x = next;
  }
  EXPECT_LE(s.observed_gradient_sup, s.gradient_bound);
  for (int trial = 0; trial < 500; ++trial) {
    const long t = gen.integer(0, 1900);
    const long k = gen.integer(1, 99);
    EXPECT_LE((iterates[t + k] - iterates[t]).norm(), D * k / std::sqrt(t + 1.0) + 1e-12);
  }
}

TEST(GradientDescent, DeterministicPredictionRegretSaturates) {
  const SystemModel m = scalar();
  LawConfig c;
  c.kind = LawKind::ogd;
  c.noise_bound = 0.0;
  const auto rec = rollout_coupled(m, vec({1}), 10000, *make_law(c, m), NoiseSpec::zero());
  const double at3 = prediction_regret_sum(rec, 1000);
  const double at4 = prediction_regret_sum(rec, 10000);
  EXPECT_GT(at3, 0.0);
  EXPECT_LE(at4, 1.01 * at3);
}

TEST(OnlineNewton, ScalarHandStep) {
  const SystemModel m = scalar();
  NewtonState s = make_newton_state(1, 1.0, 1.0, 1.0, vec({0}));
  newton_update(s, m, Observation{vec({1}), vec({-0.5}), 0, vec({0})});
  EXPECT_DOUBLE_EQ(s.info(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(s.estimate(0), 0.5);
}

TEST(OnlineNewton, ZeroRegressorChangesNothing) {
  SystemModel m = scalar();
  m.basis = [](const Vector&, long) -> Matrix { return Matrix::Zero(1, 1); };
  NewtonState s = make_newton_state(1, 1.0, 1.0, 1.0, vec({0.2}));
  newton_update(s, m, Observation{vec({1}), vec({0.5}), 0, vec({0})});
  EXPECT_EQ(s.info(0, 0), 1.0);
  EXPECT_EQ(s.estimate(0), 0.2);
}

TEST(OnlineNewton, WoodburyMatchesDirectInverse) {
  testing::Gen gen(6);
  const Matrix B = gen.matrix(2, 2);
  const Matrix Y = gen.matrix(2, 2);
  SystemModel m = constant_regressor(B, Y, vec({0.3, -0.1}), 1.0);
  m.basis = [&gen](const Vector&, long) { return gen.matrix(2, 2); };
  NewtonState s = make_newton_state(2, 0.5, 1.0, 1.0, Vector::Zero(2));
  for (long t = 0; t < 10; ++t) {
    newton_update(s, m, Observation{Vector::Zero(2), gen.vector(2), t, Vector::Zero(2)});
    EXPECT_LT((s.info_inverse - s.info.inverse()).norm(), 1e-10);
  }
}

TEST(OnlineNewton, InverseStaysConsistentOverLongRuns) {
  LimitCycleParams p;
  p.features = 50;
  const LimitCycleExperiment ex = build_limit_cycle_experiment(p);
  NewtonState s = make_newton_state(50, 1.0, 1.0, p.radius, Vector::Zero(50));
  NoiseGenerator noise(ex.gaussian_noise, 2);
  Vector x = ex.x0;
  for (long t = 0; t < 3000; ++t) {
    const Vector u = ex.model.basis(x, t) * s.estimate;
    const Vector next = step_adaptive(ex.model, x, t, s.estimate, noise.next());
    newton_update(s, ex.model, Observation{x, next, t, u});
    if (t % 100 == 99) {
      EXPECT_LT(inverse_drift(s), 1e-8);
      EXPECT_GE(min_eigenvalue(s.info), 1.0 - 1e-9);
    }
    ASSERT_LE(s.estimate.norm(), p.radius + 1e-9);
    x = next;
  }
}

TEST(OnlineNewton, RejectsSmallStep) {
  EXPECT_THROW(make_newton_state(2, 1.0, 0.5, 1.0, Vector::Zero(2)), ConfigurationError);
}

TEST(LeastSquares, ScalarHandStep) {
  const SystemModel m = scalar();
  RLSState s = make_rls_state(1, 1.0, 1.0);
  EXPECT_EQ(s.estimate(0), 0.0);
  const Vector x = vec({1});
  const Vector next = step_adaptive(m, x, 0, s.estimate, vec({0}));
  rls_update(s, m, Observation{x, next, 0, vec({0})});
  EXPECT_DOUBLE_EQ(s.unprojected(0), 0.5);
  EXPECT_DOUBLE_EQ(s.estimate(0), 0.5);
}

TEST(LeastSquares, ClosedFormRidgeSolution) {
  const SystemModel m = scalar();
  const double lambda = 1.0;
  RLSState s = make_rls_state(1, lambda, 1.0);
  Vector x = vec({1});
  for (long t = 1; t <= 5000; ++t) {
    const Vector u = m.basis(x, t - 1) * s.estimate;
    const Vector next = step_adaptive(m, x, t - 1, s.estimate, vec({0}));
    rls_update(s, m, Observation{x, next, t - 1, u});
    ASSERT_NEAR(s.estimate(0), t / (t + lambda), 1e-12);
    x = next;
  }
}

TEST(LeastSquares, RandomStreamMatchesBatchRidge) {
  testing::Gen gen(8);
  const Matrix B = gen.matrix(3, 2);
  const Vector alpha = vec({0.4, -0.2, 0.1});
  SystemModel m = constant_regressor(B, gen.matrix(2, 3), alpha, 5.0);
  std::vector<Matrix> regs;
  m.basis = [&regs](const Vector&, long t) { return regs[t]; };
  RLSState s = make_rls_state(3, 0.7, 5.0);
  Matrix V = 0.7 * Matrix::Identity(3, 3);
  Vector b = Vector::Zero(3);
  NoiseGenerator noise(NoiseSpec::ball(0.3, 1), 3);
  for (long t = 0; t < 1500; ++t) {
    regs.push_back(gen.matrix(2, 3));
    const Matrix M = B * regs[t];
    const Vector w = noise.next();
    const Vector next = M * (s.estimate - alpha) + w;
    rls_update(s, m, Observation{Vector::Zero(3), next, t, Vector(regs[t] * s.estimate)});
    V += M.transpose() * M;
    b += M.transpose() * (M * alpha - w);
  }
  const Vector batch = V.ldlt().solve(b);
  EXPECT_LT((s.unprojected - batch).norm(), 1e-10);
}

TEST(MakeLaw, MissingConstants) {
  const SystemModel m = scalar();
  LawConfig ogd;
  ogd.kind = LawKind::ogd;
  EXPECT_THROW(make_law(ogd, m), ConfigurationError);
  LawConfig vg;
  vg.kind = LawKind::vg;
  EXPECT_THROW(make_law(vg, m), ConfigurationError);
  LawConfig outside;
  outside.kind = LawKind::frozen;
  outside.initial = vec({2});
  EXPECT_THROW(make_law(outside, m), ConfigurationError);
}

TEST(MakeLaw, KindsRoundTrip) {
  for (LawKind k : {LawKind::frozen, LawKind::vg, LawKind::ogd, LawKind::newton, LawKind::rls})
    EXPECT_EQ(law_kind_from_string(to_string(k)), k);
  EXPECT_THROW(law_kind_from_string("sgd"), ConfigurationError);
}

// sqrt(A_T) <= sum g_t^2 / sqrt(A_t) <= 2 sqrt(A_T) with A_t the running sum.
TEST(WeightedGradientLemma, RandomSequences) {
  testing::Gen gen(10);
  for (int s = 0; s < 1000; ++s) {
    const int T = gen.integer(1, 400);
    const double scale = std::exp(gen.real(-5.0, 5.0));
    double A = 0.0, sum = 0.0;
    for (int t = 0; t < T; ++t) {
      const double g = gen.real(0.0, 1.0) < 0.2 ? 0.0 : scale * std::abs(gen.normal());
      A += g * g;
      if (A > 0.0) sum += g * g / std::sqrt(A);
    }
    if (A == 0.0) continue;
    EXPECT_LE(std::sqrt(A), sum * (1.0 + 1e-9));
    EXPECT_LE(sum, 2.0 * std::sqrt(A) * (1.0 + 1e-9));
  }
}

}  // namespace
}  // namespace adaptreg
