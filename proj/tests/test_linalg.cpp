#include "adaptreg/linalg.hpp"
#include "adaptreg/parallel.hpp"
#include "adaptreg/random.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace adaptreg {
namespace {

TEST(Linalg, SpectralNormOfDiagonal) {
  Matrix m = Matrix::Zero(2, 3);
  m(0, 0) = -3.0;
  m(1, 1) = 2.0;
  EXPECT_NEAR(spectral_norm(m), 3.0, 1e-14);
}

TEST(Linalg, EigenvalueExtremes) {
  Matrix s(2, 2);
  s << 2.0, 1.0, 1.0, 2.0;
  EXPECT_NEAR(min_eigenvalue(s), 1.0, 1e-14);
  EXPECT_NEAR(max_eigenvalue(s), 3.0, 1e-14);
}

TEST(Linalg, AllFinite) {
  Vector v = Vector::Ones(3);
  EXPECT_TRUE(all_finite(v));
  v(1) = std::nan("");
  EXPECT_FALSE(all_finite(v));
}

TEST(QuadraticOnBall, InteriorMinimizerIsTheUnconstrainedOne) {
  Matrix H = Matrix::Identity(2, 2) * 2.0;
  Vector b(2);
  b << 0.2, -0.4;
  const Vector y = minimize_quadratic_on_ball(H, b, 1.0);
  EXPECT_NEAR(y(0), 0.1, 1e-15);
  EXPECT_NEAR(y(1), -0.2, 1e-15);
}

TEST(QuadraticOnBall, BoundaryWithIdentityIsRadialScaling) {
  const Vector b = (Vector(2) << 3.0, 4.0).finished();
  const Vector y = minimize_quadratic_on_ball(Matrix::Identity(2, 2), b, 1.0);
  EXPECT_NEAR(y(0), 0.6, 1e-12);
  EXPECT_NEAR(y(1), 0.8, 1e-12);
}

TEST(QuadraticOnBall, RejectsIndefinite) {
  Matrix H = Matrix::Identity(2, 2);
  H(1, 1) = -1.0;
  EXPECT_THROW(minimize_quadratic_on_ball(H, Vector::Ones(2), 1.0), CertificateError);
}

TEST(QuadraticOnBall, ZeroMatrixGivesMinimumNorm) {
  const Vector y = minimize_quadratic_on_ball(Matrix::Zero(2, 2), Vector::Zero(2), 1.0);
  EXPECT_EQ(y.norm(), 0.0);
}

// KKT conditions on random instances: feasibility, stationarity with a
// nonnegative multiplier and complementary slackness.
TEST(QuadraticOnBall, KktHoldsOnRandomInstances) {
  testing::Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen.integer(1, 6);
    const Matrix H = gen.spd(n, 0.01);
    const Vector b = gen.vector(n, gen.real(0.1, 20.0));
    const double radius = gen.real(0.1, 3.0);
    const Vector y = minimize_quadratic_on_ball(H, b, radius);
    ASSERT_LE(y.norm(), radius + 1e-12);
    const Vector residual = b - H * y;  // = nu y
    if (y.norm() < radius - 1e-9) {
      EXPECT_LT(residual.norm(), 1e-8 * (1.0 + b.norm()));
    } else {
      const double nu = residual.dot(y) / y.squaredNorm();
      EXPECT_GE(nu, -1e-9);
      EXPECT_LT((residual - nu * y).norm(), 1e-7 * (1.0 + b.norm()));
    }
  }
}

TEST(Seeds, ExpansionIsStableUnderAppending) {
  std::vector<std::uint64_t> first, second;
  for (std::uint64_t i = 0; i < 8; ++i) first.push_back(expand_seed(42, i));
  for (std::uint64_t i = 0; i < 16; ++i) second.push_back(expand_seed(42, i));
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i], second[i]);
  EXPECT_NE(expand_seed(42, 0), expand_seed(43, 0));
}

TEST(Seeds, SplitmixReferenceValue) {
  // First output of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Parallel, ResolveJobsRespectsRequest) {
  EXPECT_GE(resolve_jobs(0), 1);
  EXPECT_EQ(resolve_jobs(1), 1);
}

}  // namespace
}  // namespace adaptreg
