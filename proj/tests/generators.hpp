#pragma once

#include "adaptreg/types.hpp"

#include <cstdint>
#include <random>

namespace adaptreg::testing {

// Small deterministic generators for property tests. Each property test
// draws a fixed number of cases from a fixed seed so failures replay.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double normal() { return normal_(engine_); }
  std::uint64_t seed() { return engine_(); }

  Vector vector(int n, double scale = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * normal();
    return v;
  }

  Matrix matrix(int rows, int cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = scale * normal();
    return m;
  }

  // Symmetric positive definite with eigenvalues at least `floor`.
  Matrix spd(int n, double floor = 0.1) {
    const Matrix g = matrix(n, n);
    return g * g.transpose() + floor * Matrix::Identity(n, n);
  }

  // Uniform in the ball of the given radius.
  Vector in_ball(int n, double radius) {
    Vector v = vector(n);
    const double r = radius * std::pow(real(0.0, 1.0), 1.0 / n);
    return v.norm() > 0.0 ? Vector(v * (r / v.norm())) : v;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace adaptreg::testing
