#pragma once

#include "adaptreg/types.hpp"

namespace adaptreg {

/// Largest singular value.
double spectral_norm(const Matrix& m);

double min_eigenvalue(const Matrix& symmetric);
double max_eigenvalue(const Matrix& symmetric);

bool all_finite(const Vector& v);

/// Minimizes 0.5 y'Hy - b'y over the ball ||y|| <= radius for symmetric
/// positive semidefinite H.
///
/// The minimizer satisfies (H + nu I) y = b with nu >= 0 and
/// nu (||y|| - radius) = 0. nu is located by bisection on the secular
/// function ||(H + nu I)^{-1} b|| after one eigendecomposition of H, so each
/// bisection step costs O(p). The upper end of the bracket doubles until the
/// point is strictly inside the ball; bisection stops once ||y|| is within
/// `tolerance` of the radius. Throws CertificateError when H has an
/// eigenvalue below -1e-12 * max(1, ||H||).
Vector minimize_quadratic_on_ball(const Matrix& H, const Vector& b, double radius,
                                  double tolerance = 1e-12);

}  // namespace adaptreg
