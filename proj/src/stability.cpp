#include "adaptreg/stability.hpp"

#include "adaptreg/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace adaptreg {
namespace {

constexpr double kDecreaseTolerance = 1e-9;
constexpr double kSemidefiniteTolerance = 1e-8;
constexpr double kMetricTolerance = 1e-9;

void record_worst(CheckReport& r, double margin, const Vector& x, long t) {
  if (r.samples == 0 || margin > r.worst_margin) {
    r.worst_margin = margin;
    r.witness_state = x;
    r.witness_time = t;
  }
  ++r.samples;
}

// Largest generalized eigenvalue of (S, M) for SPD M.
double generalized_max(const Matrix& S, const Matrix& M) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(S, M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

// Both sides of the (incremental) exponential ISS inequality along a path of
// deviations e_t with inputs u_k. rhs_t is computed by the recursion
// s_{t+1} = rho s_t + ||u_t||, rhs_t = beta rho^t e_0 + gamma s_t.
IssReport compare_envelope(const IncrementalStabilityConstants& c, const std::vector<double>& dev,
                           const std::vector<double>& input_norms) {
  IssReport r;
  double discounted = 0.0;
  double decay = 1.0;
  r.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < dev.size(); ++t) {
    if (t > 0) {
      discounted = c.rho * discounted + input_norms[t - 1];
      decay *= c.rho;
    }
    const double rhs = c.beta * decay * dev[0] + c.gamma * discounted;
    const double lhs = dev[t];
    r.lhs.push_back(lhs);
    r.rhs.push_back(rhs);
    const double slack = rhs - lhs;
    if (slack < r.worst_slack) {
      r.worst_slack = slack;
      r.worst_step = static_cast<long>(t);
    }
    if (lhs > rhs * (1.0 + 1e-9) + 1e-12 && r.first_violation < 0) {
      r.pass = false;
      r.first_violation = static_cast<long>(t);
    }
  }
  return r;
}

}  // namespace

std::vector<Vector> latin_hypercube(const Vector& lower, const Vector& upper, std::size_t count,
                                    std::uint64_t seed) {
  if (lower.size() != upper.size()) throw ConfigurationError("box bounds differ in dimension");
  const long n = lower.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> samples(count, Vector(n));
  std::vector<std::size_t> strata(count);
  for (long d = 0; d < n; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (std::size_t i = 0; i < count; ++i) {
      const double u = (strata[i] + unit(rng)) / static_cast<double>(count);
      samples[i](d) = lower(d) + u * (upper(d) - lower(d));
    }
  }
  return samples;
}

SampleGrid make_sample_grid(const Vector& lower, const Vector& upper, std::size_t lhs_count,
                            std::uint64_t seed, std::vector<Vector> extra,
                            std::vector<long> times) {
  SampleGrid grid;
  grid.states = std::move(extra);
  for (Vector& x : latin_hypercube(lower, upper, lhs_count, seed)) grid.states.push_back(std::move(x));
  grid.times = std::move(times);
  std::ostringstream os;
  os.precision(6);
  os << "box [";
  for (long i = 0; i < lower.size(); ++i) os << (i ? ", " : "") << lower(i) << ".." << upper(i);
  os << "], " << lhs_count << " latin-hypercube samples";
  grid.region = os.str();
  return grid;
}

CheckReport check_lyapunov_decrease(const LyapunovCertificate& cert, const NominalMap& nominal,
                                    const SampleGrid& grid) {
  if (grid.states.empty() || grid.times.empty())
    throw ConfigurationError("sample grid must not be empty");
  CheckReport r;
  r.region = grid.region;
  for (long t : grid.times) {
    for (const Vector& x : grid.states) {
      const double margin =
          cert.value(nominal(x, t), t + 1) - cert.value(x, t) + cert.decrease_rate * x.squaredNorm();
      record_worst(r, margin, x, t);
    }
  }
  r.pass = r.worst_margin <= kDecreaseTolerance;
  return r;
}

CheckReport check_lyapunov_gradient(const LyapunovCertificate& cert, const SampleGrid& grid) {
  CheckReport r;
  r.region = grid.region;
  bool ok = true;
  for (long t : grid.times) {
    const long n = grid.states.empty() ? 0 : grid.states.front().size();
    if (n > 0 && std::abs(cert.value(Vector::Zero(n), t)) > 1e-12) ok = false;
    for (const Vector& x : grid.states) {
      if (cert.value(x, t) < -1e-12) ok = false;
      const Vector g = cert.gradient(x, t);
      Vector fd(x.size());
      const double h = 1e-6 * std::max(1.0, x.norm());
      for (long i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        fd(i) = (cert.value(xp, t) - cert.value(xm, t)) / (2.0 * h);
      }
      const double rel = (g - fd).norm() / std::max(1.0, g.norm());
      record_worst(r, rel, x, t);
    }
  }
  r.pass = ok && r.worst_margin <= 1e-5;
  return r;
}

Matrix finite_difference_jacobian(const NominalMap& map, const Vector& x, long t) {
  const long n = x.size();
  const double h = 1e-6 * std::max(1.0, x.norm());
  Matrix J(n, n);
  for (long i = 0; i < n; ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    J.col(i) = (map(xp, t) - map(xm, t)) / (2.0 * h);
  }
  return J;
}

ContractionReport check_contraction(const ContractionCertificate& cert, const NominalMap& dynamics,
                                    const SampleGrid& grid, const JacobianMap& jacobian,
                                    const DirectionField& directions) {
  if (grid.states.empty() || grid.times.empty())
    throw ConfigurationError("sample grid must not be empty");
  ContractionReport r;
  r.region = grid.region;
  r.minimal_rate = 0.0;
  for (long t : grid.times) {
    for (const Vector& x : grid.states) {
      const Matrix J = jacobian ? jacobian(x, t) : finite_difference_jacobian(dynamics, x, t);
      const Matrix M = cert.metric(x, t);
      const Matrix Mnext = cert.metric(dynamics(x, t), t + 1);
      Matrix S = J.transpose() * Mnext * J;
      Matrix Mc = M;
      if (directions) {
        const Matrix V = directions(x, t);
        S = V.transpose() * S * V;
        Mc = V.transpose() * M * V;
      }
      S = 0.5 * (S + S.transpose()).eval();
      Mc = 0.5 * (Mc + Mc.transpose()).eval();
      const double margin = max_eigenvalue(S - cert.rate * Mc);
      record_worst(r, margin, x, t);
      r.minimal_rate = std::max(r.minimal_rate, generalized_max(S, Mc));
    }
  }
  r.pass = r.worst_margin <= kSemidefiniteTolerance;
  return r;
}

CheckReport check_metric_bounds(const ContractionCertificate& cert, const SampleGrid& grid) {
  CheckReport r;
  r.region = grid.region;
  for (long t : grid.times) {
    for (const Vector& x : grid.states) {
      const Matrix M = cert.metric(x, t);
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues()(0);
      const double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
      // Positive margin means a bound is violated.
      const double margin = std::max(cert.metric_lower - lo, hi - cert.metric_upper);
      record_worst(r, margin, x, t);
    }
  }
  r.pass = r.worst_margin <= kMetricTolerance;
  return r;
}

IncrementalStabilityConstants e_delta_iss_from_contraction(const ContractionCertificate& cert) {
  if (!(cert.metric_lower > 0.0) || cert.metric_upper < cert.metric_lower)
    throw ConfigurationError("metric bounds must satisfy 0 < mu <= L");
  if (!(cert.rate > 0.0 && cert.rate < 1.0))
    throw ConfigurationError("contraction rate must lie in (0, 1)");
  const double ratio = std::sqrt(cert.metric_upper / cert.metric_lower);
  return {ratio, std::sqrt(cert.rate), ratio};
}

std::optional<double> perturbed_contraction_rate(const ContractionCertificate& cert, double W) {
  if (W < 0.0) throw ConfigurationError("noise bound W must be nonnegative");
  if (cert.metric_lipschitz == 0.0) return cert.rate;
  const double lf2 = cert.jacobian_bound * cert.jacobian_bound;
  const double limit = cert.metric_lower * (1.0 - cert.rate) / (lf2 * cert.metric_lipschitz);
  // At the limit the rate reaches 1, which is not a contraction.
  if (W >= limit) return std::nullopt;
  return cert.rate + lf2 * cert.metric_lipschitz * W / cert.metric_lower;
}

IssReport check_incremental_bound(const IncrementalStabilityConstants& c, const Matrix& xs,
                                  const Matrix& ys, const std::vector<double>& input_norms) {
  if (xs.rows() != ys.rows() || xs.cols() != ys.cols())
    throw ConfigurationError("trajectories differ in shape");
  if (static_cast<long>(input_norms.size()) + 1 < xs.cols())
    throw ConfigurationError("input sequence is shorter than the trajectories");
  std::vector<double> dev(xs.cols());
  for (long t = 0; t < xs.cols(); ++t) dev[t] = (xs.col(t) - ys.col(t)).norm();
  return compare_envelope(c, dev, input_norms);
}

IssReport verify_e_delta_iss_empirical(const IncrementalStabilityConstants& c, const NominalMap& g,
                                       const std::vector<Vector>& inputs, const Vector& x0,
                                       const Vector& y0, long horizon) {
  if (static_cast<long>(inputs.size()) < horizon)
    throw ConfigurationError("need one input per step");
  std::vector<double> dev{(x0 - y0).norm()};
  std::vector<double> norms;
  Vector x = x0, y = y0;
  for (long t = 0; t < horizon; ++t) {
    x = g(x, t) + inputs[t];
    y = g(y, t);
    dev.push_back((x - y).norm());
    norms.push_back(inputs[t].norm());
  }
  return compare_envelope(c, dev, norms);
}

IssReport check_e_iss_empirical(const IncrementalStabilityConstants& c, const NominalMap& g,
                                const std::vector<Vector>& inputs, const Vector& x0,
                                long horizon) {
  if (static_cast<long>(inputs.size()) < horizon)
    throw ConfigurationError("need one input per step");
  std::vector<double> dev{x0.norm()};
  std::vector<double> norms;
  Vector x = x0;
  for (long t = 0; t < horizon; ++t) {
    x = g(x, t) + inputs[t];
    dev.push_back(x.norm());
    norms.push_back(inputs[t].norm());
  }
  return compare_envelope(c, dev, norms);
}

PersistenceReport pe_monitor(const std::vector<Matrix>& regressors, double mu, long warmup) {
  if (warmup < 1) throw ConfigurationError("warm-up T0 must be at least 1");
  PersistenceReport r;
  if (regressors.empty()) return r;
  const long p = regressors.front().cols();
  Matrix info = Matrix::Zero(p, p);
  for (std::size_t k = 0; k < regressors.size(); ++k) {
    info.noalias() += regressors[k].transpose() * regressors[k];
    const long t = static_cast<long>(k) + 1;
    const double m = min_eigenvalue(info / static_cast<double>(t));
    r.min_eigs.push_back(m);
    if (t >= warmup && m < mu - 1e-12 && r.first_violation < 0) {
      r.satisfied = false;
      r.first_violation = t;
    }
  }
  return r;
}

AdmissibilityValue admissibility_functional(const std::vector<double>& norms, double psi,
                                            double gain) {
  if (!(psi > 0.0) || !(gain > 0.0)) throw ConfigurationError("psi and B must be positive");
  AdmissibilityValue out;
  const std::size_t T = norms.size();
  if (T == 0) return out;
  // best_ending = max over windows ending at t-1 of sum(a_s); Kadane's scan.
  double best_ending = -std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  const std::size_t half = std::max<std::size_t>(1, T / 2);
  for (std::size_t s = 0; s < T; ++s) {
    const double a = gain * norms[s] - psi;
    best_ending = std::max(a, best_ending + a);
    best = std::max(best, best_ending);
    if (s + 1 == half) out.half_value = best;
  }
  out.value = best;
  out.unbounded_trend = out.value - out.half_value > psi;
  return out;
}

AdmissibilityValue admissibility_functional(const std::vector<Vector>& sequence, double psi,
                                            double gain) {
  std::vector<double> norms;
  norms.reserve(sequence.size());
  for (const Vector& d : sequence) norms.push_back(d.norm());
  return admissibility_functional(norms, psi, gain);
}

}  // namespace adaptreg
