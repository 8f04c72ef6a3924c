#pragma once

#include "adaptreg/dynamics.hpp"
#include "adaptreg/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace adaptreg {

/// Discrete-time Lyapunov function for the nominal dynamics:
/// Q(f(x,t), t+1) <= Q(x,t) - rho ||x||^2, Q(., t) mu-strongly convex,
/// ||grad Q(x,t)|| <= L_Q ||x|| and ||f(x,t)|| <= L_f ||x||.
struct LyapunovCertificate {
  std::function<double(const Vector& x, long t)> value;
  std::function<Vector(const Vector& x, long t)> gradient;
  double decrease_rate = 0.0;      // rho in (0, 1)
  double strong_convexity = 0.0;   // mu
  double grad_lipschitz = 0.0;     // L_Q
  double nominal_lipschitz = 0.0;  // L_f
};

/// Contraction metric M(x,t) with rate gamma:
/// J(x,t)' M(f(x,t), t+1) J(x,t) <= gamma M(x,t), mu I <= M <= L I.
struct ContractionCertificate {
  std::function<Matrix(const Vector& x, long t)> metric;
  double rate = 0.0;              // gamma in (0, 1)
  double metric_lower = 0.0;      // mu
  double metric_upper = 0.0;      // L
  double metric_lipschitz = 0.0;  // L_M
  double jacobian_bound = 0.0;    // L_f
  std::string region;             // where the constants were established
};

/// (beta, rho, gamma) of exponential incremental input-to-state stability.
/// Also used for the single-trajectory (E-ISS) variant.
struct IncrementalStabilityConstants {
  double beta = 1.0;
  double rho = 0.5;
  double gamma = 1.0;
};

/// Sampled verification region. Every report carries the region it was
/// evaluated on; the checks are sampled, never exhaustive.
struct SampleGrid {
  std::vector<Vector> states;
  std::vector<long> times{0};
  std::string region;
};

/// Latin-hypercube samples in the box [lower, upper].
std::vector<Vector> latin_hypercube(const Vector& lower, const Vector& upper, std::size_t count,
                                    std::uint64_t seed);

/// Box region description plus Latin-hypercube samples and the given
/// user-supplied grid points.
SampleGrid make_sample_grid(const Vector& lower, const Vector& upper, std::size_t lhs_count,
                            std::uint64_t seed, std::vector<Vector> extra = {},
                            std::vector<long> times = {0});

struct CheckReport {
  bool pass = true;
  double worst_margin = 0.0;  // largest violation measure over the samples
  Vector witness_state;
  long witness_time = 0;
  std::size_t samples = 0;
  std::string region;
};

/// Evaluates Q(f(x,t),t+1) - Q(x,t) + rho ||x||^2 at every sample; passes iff
/// the maximum is <= 1e-9. The worst margin and its argmax are reported.
CheckReport check_lyapunov_decrease(const LyapunovCertificate& cert, const NominalMap& nominal,
                                    const SampleGrid& grid);

/// Compares the certificate gradient with central differences of Q
/// (relative tolerance 1e-5) and checks Q(0,t) = 0 and Q >= 0.
CheckReport check_lyapunov_gradient(const LyapunovCertificate& cert, const SampleGrid& grid);

using JacobianMap = std::function<Matrix(const Vector& x, long t)>;

/// Central-difference Jacobian with step 1e-6 * max(1, ||x||).
Matrix finite_difference_jacobian(const NominalMap& map, const Vector& x, long t);

// Optional restriction of the contraction check to a subspace: returns an
// n x k matrix whose columns span the directions that must contract.
using DirectionField = std::function<Matrix(const Vector& x, long t)>;

struct ContractionReport : CheckReport {
  // max over samples of the largest generalized eigenvalue of
  // (J' M(f) J, M): the smallest rate the samples support.
  double minimal_rate = 0.0;
};

/// Passes iff lambda_max(J' M(f(x,t),t+1) J - gamma M(x,t)) <= 1e-8 at every
/// sample. Uses `jacobian` when provided, central differences otherwise.
/// With `directions`, the quadratic forms are compressed to the given
/// subspace before the eigenvalue test.
ContractionReport check_contraction(const ContractionCertificate& cert, const NominalMap& dynamics,
                                    const SampleGrid& grid, const JacobianMap& jacobian = {},
                                    const DirectionField& directions = {});

/// Checks mu - 1e-9 <= eig(M(x,t)) <= L + 1e-9 at every sample.
CheckReport check_metric_bounds(const ContractionCertificate& cert, const SampleGrid& grid);

/// Contraction in a metric with mu I <= M <= L I gives
/// (sqrt(L/mu), sqrt(gamma), sqrt(L/mu)) incremental stability.
IncrementalStabilityConstants e_delta_iss_from_contraction(const ContractionCertificate& cert);

/// Rate of the noise-perturbed dynamics f(x,t) + w_t with ||w_t|| <= W:
/// gamma + L_f^2 L_M W / mu when W < mu (1 - gamma) / (L_f^2 L_M), gamma
/// itself for a state-independent metric (L_M = 0), nullopt otherwise.
std::optional<double> perturbed_contraction_rate(const ContractionCertificate& cert, double W);

struct IssReport {
  bool pass = true;
  double worst_slack = 0.0;  // min over t of rhs - lhs (negative on failure)
  long worst_step = 0;
  long first_violation = -1;
  std::vector<double> lhs;
  std::vector<double> rhs;
};

/// Checks ||x_t - y_t|| <= beta rho^t ||x_0 - y_0|| + gamma sum_k rho^{t-1-k} ||u_k||
/// for given trajectories (x has T+1 columns, u has T entries). Comparison
/// is made with a relative tolerance of 1e-9 to absorb rounding.
IssReport check_incremental_bound(const IncrementalStabilityConstants& c, const Matrix& xs,
                                  const Matrix& ys, const std::vector<double>& input_norms);

/// Simulates x_{t+1} = g(x_t,t) + u_t and y_{t+1} = g(y_t,t) and checks the
/// incremental bound at every step.
IssReport verify_e_delta_iss_empirical(const IncrementalStabilityConstants& c, const NominalMap& g,
                                       const std::vector<Vector>& inputs, const Vector& x0,
                                       const Vector& y0, long horizon);

/// Single-trajectory analogue: ||x_t|| <= beta rho^t ||x_0|| + gamma sum_k rho^{t-1-k} ||u_k||.
IssReport check_e_iss_empirical(const IncrementalStabilityConstants& c, const NominalMap& g,
                                const std::vector<Vector>& inputs, const Vector& x0,
                                long horizon);

struct PersistenceReport {
  bool satisfied = true;
  long first_violation = -1;
  // min_eigs[t-1] = lambda_min((1/t) sum_{k<=t} M_k' M_k), t = 1..T
  std::vector<double> min_eigs;
};

/// Persistence of excitation: lambda_min of the running average information
/// matrix must stay >= mu for every t >= T_0 (t counts the matrices seen).
PersistenceReport pe_monitor(const std::vector<Matrix>& regressors, double mu, long warmup);

struct AdmissibilityValue {
  double value = 0.0;       // functional over the full horizon
  double half_value = 0.0;  // functional over the first half
  bool unbounded_trend = false;
};

/// sup_{1<=t<=T} max_{0<=k<t} [ -(t-k) psi + B sum_{s=k}^{t-1} ||d_s|| ]
/// computed by a single running-maximum (Kadane) scan over
/// a_s = B ||d_s|| - psi. Flags an unbounded trend when the value at T
/// exceeds the value at T/2 by more than psi.
AdmissibilityValue admissibility_functional(const std::vector<double>& norms, double psi,
                                            double gain);
AdmissibilityValue admissibility_functional(const std::vector<Vector>& sequence, double psi,
                                            double gain);

}  // namespace adaptreg
