#include "adaptreg/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace adaptreg {

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  // The Gram matrix of the short side is tiny for the wide basis matrices
  // used throughout (d x p with d << p).
  if (m.rows() <= m.cols()) {
    const Matrix gram = m * m.transpose();
    return std::sqrt(std::max(0.0, max_eigenvalue(gram)));
  }
  const Matrix gram = m.transpose() * m;
  return std::sqrt(std::max(0.0, max_eigenvalue(gram)));
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

bool all_finite(const Vector& v) { return v.allFinite(); }

Vector minimize_quadratic_on_ball(const Matrix& H, const Vector& b, double radius,
                                  double tolerance) {
  if (radius <= 0.0) throw ConfigurationError("ball radius must be positive");
  if (H.rows() != H.cols() || H.rows() != b.size())
    throw ConfigurationError("quadratic dimensions are inconsistent");

  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Vector& lambda = es.eigenvalues();
  const Matrix& basis = es.eigenvectors();
  const double scale = std::max(1.0, std::abs(lambda(lambda.size() - 1)));
  if (lambda(0) < -1e-12 * scale)
    throw CertificateError("matrix is not positive semidefinite (min eigenvalue " +
                           std::to_string(lambda(0)) + ")");

  const Vector c = basis.transpose() * b;
  const double zero_tol = 1e-14 * scale;

  auto point_norm = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double denom = std::max(lambda(i), 0.0) + nu;
      if (denom <= zero_tol) {
        if (std::abs(c(i)) > zero_tol) return std::numeric_limits<double>::infinity();
        continue;
      }
      const double v = c(i) / denom;
      s += v * v;
    }
    return std::sqrt(s);
  };
  auto point = [&](double nu) {
    Vector z(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double denom = std::max(lambda(i), 0.0) + nu;
      z(i) = denom <= zero_tol ? 0.0 : c(i) / denom;
    }
    return Vector(basis * z);
  };

  // Interior solution (includes the hard case where b has no component in
  // the null space of H; the minimum-norm minimizer is returned).
  if (point_norm(0.0) <= radius) return point(0.0);

  double lo = 0.0;
  double hi = std::max(scale, 1.0);
  while (point_norm(hi) >= radius) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("ball projection bracket overflow");
  }
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double nrm = point_norm(mid);
    if (nrm > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (radius - point_norm(hi) <= tolerance || hi - lo <= 1e-300) break;
  }
  // hi is always on the feasible side. The minimizer sits on the sphere, so
  // push the point out to it, stopping at the last representable scale inside.
  const Vector z = point(hi);
  double outward = radius / z.norm();
  while ((z * outward).norm() > radius) outward = std::nextafter(outward, 0.0);
  return z * outward;
}

}  // namespace adaptreg
