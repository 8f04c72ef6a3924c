#pragma once

#include "adaptreg/adapt.hpp"
#include "adaptreg/c2d.hpp"
#include "adaptreg/dynamics.hpp"
#include "adaptreg/stability.hpp"

#include <cstdint>
#include <vector>

namespace adaptreg {

// ---------------------------------------------------------------------------
// Cartpole with an LQR controller designed on wrong parameters.

struct CartpoleParams {
  double cart_mass = 1.0;
  double pole_mass = 1.0;
  double pole_length = 1.0;
  double gravity = 9.81;
  double dt = 0.01;
};

/// Time derivative of (q, qdot, theta, thetadot) under cart force u.
Vector cartpole_continuous(const CartpoleParams& params, const Vector& x, double u);

/// One classical RK4 step of length params.dt with u held.
Vector cartpole_rk4_step(const CartpoleParams& params, const Vector& x, double u);

/// Upright equilibrium (0, 0, pi, 0).
Vector cartpole_equilibrium();

struct LqrSolution {
  Matrix P;
  Matrix K;
  int iterations = 0;
  double residual = 0.0;
};

/// Infinite-horizon discrete LQR by fixed-point iteration of the Riccati
/// recursion (relative change 1e-12). Throws NumericalError when the
/// iteration has not converged after 10^5 steps, which happens when (A, B)
/// is not stabilizable.
LqrSolution discrete_lqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

/// Random Fourier features cos(omega' x + b), omega ~ N(0, I), b ~ U[0, 2 pi).
class RandomFeatureBank {
 public:
  RandomFeatureBank(int count, int input_dim, std::uint64_t seed);
  Eigen::RowVectorXd operator()(const Vector& x) const;
  int count() const { return static_cast<int>(phases_.size()); }
  const Matrix& frequencies() const { return frequencies_; }
  const Vector& phases() const { return phases_; }

 private:
  Matrix frequencies_;  // count x input_dim
  Vector phases_;
};

struct CartpoleSetup {
  CartpoleParams truth;
  CartpoleParams design{0.45, 0.45, 0.8, 9.81, 0.01};
  int features = 400;
  double radius = 10.0;      // D
  double regularizer = 1.0;  // lambda
  double fit_radius = 0.5;   // box half-width for the reference parameter fit
  int fit_samples = 2000;
  std::uint64_t seed = 0;
};

/// The matched model in shifted coordinates xbar = x - x_eq:
///   f(xbar)  = RK4_design(xbar + x_eq, -K xbar) - x_eq
///   B(xbar)  = d RK4_design / du at the same point
///   Y(xbar)  = features(xbar + x_eq)
///   alpha    = ridge fit of the true/design mismatch onto -B Y, clipped to D
///   residual = the part of the true step the matched term does not explain
/// so the adaptive trajectory is always the true plant.
struct CartpoleExperiment {
  SystemModel model;
  LyapunovCertificate lyapunov;  // Q = 0.5 xbar' P xbar, constants from the linearization
  LawConfig law;                 // velocity gradient on grad Q = P xbar
  LqrSolution lqr;
  Matrix A_design;
  Matrix B_design;
  double design_closed_loop_radius = 0.0;
  double true_closed_loop_radius = 0.0;
};

CartpoleExperiment build_cartpole_experiment(const CartpoleSetup& setup);

/// (1/T) sum_{t=1}^T ||xbar_t||^2 over the adaptive trajectory.
double average_cost(const TrajectoryRecord& record);

struct CartpoleStudyConfig {
  CartpoleSetup setup;
  int n_trajectories = 500;
  long horizon = 2000;
  long baseline_horizon = 20000;
  double initial_radius = 0.5;
  double divergence_threshold = 1e6;
  bool run_baseline = true;
  int jobs = 0;
};

struct CartpoleRun {
  Vector initial;  // shifted coordinates
  double cost = 0.0;  // infinite when the adaptive run diverged
  bool divergent = false;
  long divergence_step = -1;
  bool baseline_divergent = false;
  long baseline_divergence_step = -1;
  double baseline_max_norm = 0.0;
};

struct CartpoleStudy {
  std::vector<CartpoleRun> runs;
  double fraction_below_tenth = 0.0;
  double fraction_below_one = 0.0;
  double baseline_divergent_fraction = 0.0;
  double runtime_seconds = 0.0;
};

/// Initial conditions uniform in the l-infinity ball around x_eq; each is
/// rolled out with velocity-gradient adaptation and (optionally) without
/// adaptation over the longer baseline horizon.
CartpoleStudy run_cartpole_study(const CartpoleStudyConfig& config);

// ---------------------------------------------------------------------------
// Forward-Euler limit-cycle system with sinusoidal features.

struct LimitCycleParams {
  double tau = 0.05;
  double sigma = 0.1;
  int features = 200;
  double radius = 2.0;      // D
  double alpha_norm = 1.0;  // ||alpha||, direction drawn from the seed
  std::uint64_t seed = 0;
  // When set, the basis is evaluated along the unit circle (cos tau t,
  // sin tau t) instead of the state, as delayed inputs require.
  bool state_independent = false;
};

struct LimitCycleExperiment {
  SystemModel model;
  ContractionCertificate contraction;  // polar metric, rate in the radial direction
  DirectionField radial;               // unit radial direction at (x, y)
  Vector x0;
  Vector frequencies;
  NoiseSpec gaussian_noise;  // sqrt(tau) sigma N(0, I)
  LawConfig ogd;
  LawConfig newton;
};

/// Nominal x + tau(-y + x/r - x), y + tau(x + y/r - y) (with x/r := 0 at the
/// origin), B = I, Y = tau [sin(omega (x + sin(tau t)))'; sin(omega (y + sin(tau t)))'].
/// p = 1/(2 tau^2) features give ||Y|| <= 1 = M.
LimitCycleExperiment build_limit_cycle_experiment(const LimitCycleParams& params);

/// Polar grid on the annulus rmin <= r <= rmax.
SampleGrid annulus_grid(double rmin, double rmax, int n_radii, int n_angles);

/// Jacobian of the limit-cycle nominal map.
Matrix limit_cycle_jacobian(double tau, const Vector& z);

// ---------------------------------------------------------------------------
// Scalar test system f = 0.5 x, B = Y = 1, alpha = 1, D = M = 1.

struct ScalarSuite {
  SystemModel model;
  LyapunovCertificate lyapunov;        // Q = x^2, rho = 0.75, mu = 2, L_Q = 2, L_f = 0.5
  ContractionCertificate contraction;  // M = 1, gamma = 0.25
};

ScalarSuite build_scalar_suite();

// ---------------------------------------------------------------------------
// Continuous plants for the sampling-period budgets.

/// xdot = -x + u with pi = 0. Q = x^2 decreases at rho = 2 (<grad Q, f> <= -rho Q),
/// mu = 2 and L_Q = 2. The claimed L_f = L_pi = 1 are upper bounds.
ContinuousPlant decay_plant();

/// xdot = A x + b u, A = [[-0.5, 0.5], [-0.5, -0.5]], b = (0, 1), pi = -[0, 0.5] x.
/// The closed loop A - b k is contracting in M = I at lambda = 0.5.
ContinuousPlant planar_plant();

}  // namespace adaptreg
