#include "adaptreg/c2d.hpp"

#include "adaptreg/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace adaptreg {
namespace {

constexpr int kInitialSubsteps = 16;
constexpr int kMaxSubsteps = 1024;
constexpr double kAgreement = 1e-9;

ZohBudget finish(std::vector<std::pair<std::string, double>> terms) {
  ZohBudget b;
  b.terms = std::move(terms);
  b.tau = b.terms.front().second;
  for (const auto& term : b.terms) b.tau = std::min(b.tau, term.second);
  return b;
}

void flag(ZohBudget& b, const std::string& why) {
  b.applicable = false;
  b.note = b.note.empty() ? why : b.note + "; " + why;
}

}  // namespace

bool check_regular_equilibrium(const ContinuousPlant& plant, const std::vector<double>& times) {
  const Vector zero = Vector::Zero(plant.state_dim);
  for (double s : times) {
    const Vector u = plant.policy(zero, s);
    if (u.norm() > 1e-12) return false;
    if (plant.field(zero, u, s).norm() > 1e-12) return false;
  }
  return true;
}

Vector flow_map(const ContinuousPlant& plant, const Vector& x, double s, double tau,
                int substeps) {
  if (!(tau > 0.0)) throw ConfigurationError("hold interval tau must be positive");
  if (substeps < 1) throw ConfigurationError("substeps must be at least 1");
  const Vector u = plant.policy(x, s);
  const double h = tau / substeps;
  Vector xi = x;
  for (int i = 0; i < substeps; ++i) {
    const double t = s + i * h;
    const Vector k1 = plant.field(xi, u, t);
    const Vector k2 = plant.field(xi + 0.5 * h * k1, u, t + 0.5 * h);
    const Vector k3 = plant.field(xi + 0.5 * h * k2, u, t + 0.5 * h);
    const Vector k4 = plant.field(xi + h * k3, u, t + h);
    xi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!xi.allFinite()) throw NumericalError("flow map produced a non-finite state");
  }
  return xi;
}

FlowResult flow_map_auto(const ContinuousPlant& plant, const Vector& x, double s, double tau) {
  FlowResult r;
  int n = kInitialSubsteps;
  Vector coarse = flow_map(plant, x, s, tau, n);
  while (n < kMaxSubsteps) {
    const Vector fine = flow_map(plant, x, s, tau, 2 * n);
    n *= 2;
    const double scale = std::max(fine.norm(), 1e-300);
    const bool agree = (fine - coarse).norm() <= kAgreement * scale;
    coarse = fine;
    if (agree) {
      r.converged = true;
      break;
    }
  }
  r.state = coarse;
  r.substeps = n;
  return r;
}

NominalMap zoh_discretize(const ContinuousPlant& plant, double tau, std::optional<int> substeps) {
  if (!(tau > 0.0)) throw ConfigurationError("hold interval tau must be positive");
  if (substeps) {
    const int n = *substeps;
    return [plant, tau, n](const Vector& x, long t) {
      return flow_map(plant, x, tau * static_cast<double>(t), tau, n);
    };
  }
  return [plant, tau](const Vector& x, long t) {
    return flow_map_auto(plant, x, tau * static_cast<double>(t), tau).state;
  };
}

ZohBudget tau_budget_lyapunov(double Lf, double Lpi, double LQ, double rho, double mu,
                              double gamma_split) {
  if (!(gamma_split > 0.0 && gamma_split < 1.0))
    throw ConfigurationError("gamma_split must lie in (0, 1)");
  if (!(Lf > 0.0 && Lpi > 0.0 && LQ > 0.0 && rho > 0.0 && mu > 0.0))
    throw ConfigurationError("budget constants must be positive");
  ZohBudget b = finish({{"inverse_lf", 1.0 / Lf},
                        {"inverse_gamma_rho", 1.0 / (gamma_split * rho)},
                        {"curvature", 2.0 * (1.0 - gamma_split) * rho * mu /
                                          (895.0 * LQ * Lf * Lf * Lpi * Lpi)}});
  if (std::min(Lf, Lpi) < 1.0) flag(b, "requires min{L_f, L_pi} >= 1");
  if (LQ < 1.0) flag(b, "requires L_Q >= 1");
  return b;
}

ZohBudget tau_budget_contraction(double Lf, double Lpi, double LM, double lambda, double mu,
                                 double L, double D, double gamma_split) {
  if (!(gamma_split > 0.0 && gamma_split < 1.0))
    throw ConfigurationError("gamma_split must lie in (0, 1)");
  if (!(Lf > 0.0 && Lpi > 0.0 && LM > 0.0 && lambda > 0.0 && mu > 0.0 && L > 0.0 && D > 0.0))
    throw ConfigurationError("budget constants must be positive");
  ZohBudget b = finish({{"inverse_lf", 1.0 / Lf},
                        {"inverse_two_lambda_gamma", 1.0 / (2.0 * lambda * gamma_split)},
                        {"curvature", 2.0 * lambda * (1.0 - gamma_split) * mu /
                                          (1463.0 * D * D * L * LM * Lf * Lf * Lpi * Lpi)}});
  if (std::min(Lf, Lpi) < 1.0) flag(b, "requires min{L_f, L_pi} >= 1");
  if (std::min(L, LM) < 1.0) flag(b, "requires min{L, L_M} >= 1");
  if (D < 1.0) flag(b, "requires D >= 1");
  return b;
}

EulerErrorReport verify_euler_error(const ContinuousPlant& plant, const Vector& x, double s,
                                    double tau) {
  EulerErrorReport r;
  const Vector phi = flow_map(plant, x, s, tau, kMaxSubsteps);
  const Vector euler = x + tau * plant.field(x, plant.policy(x, s), s);
  const double xn = x.norm();
  r.euler_lhs = (phi - euler).norm();
  r.euler_rhs = 5.0 * tau * tau * plant.Lf * plant.Lf * plant.Lpi * std::exp(plant.Lf * tau) * xn;
  r.flow_lhs = (phi - x).norm();
  r.flow_rhs = (1.0 + 3.0 * plant.Lpi) * std::expm1(plant.Lf * tau) * xn;
  const double slack = 1e-12 * std::max(1.0, xn);
  r.pass = r.euler_lhs <= r.euler_rhs + slack && r.flow_lhs <= r.flow_rhs + slack;
  return r;
}

ZohReport verify_zoh_lyapunov(const ContinuousPlant& plant,
                              const std::function<double(const Vector&, double)>& Q, double rho,
                              double tau, double gamma_split, const SampleGrid& grid,
                              double budget) {
  ZohReport r;
  r.region = grid.region;
  r.budget = budget;
  r.over_budget = tau > budget;
  r.target_rate = 1.0 - gamma_split * tau * rho;
  const NominalMap g = zoh_discretize(plant, tau);
  bool first = true;
  for (long t : grid.times) {
    for (const Vector& x : grid.states) {
      const double v = Q(x, tau * t);
      const double v_next = Q(g(x, t), tau * (t + 1));
      const double margin = (v_next - r.target_rate * v) / std::max(1.0, v);
      if (first || margin > r.worst_margin) {
        r.worst_margin = margin;
        r.witness_state = x;
        r.witness_time = t;
        first = false;
      }
      ++r.samples;
    }
  }
  r.pass = r.worst_margin <= 1e-9;
  return r;
}

ZohReport verify_zoh_contraction(const ContinuousPlant& plant,
                                 const std::function<Matrix(const Vector&, double)>& metric,
                                 double lambda, double tau, double gamma_split,
                                 const SampleGrid& grid, double budget) {
  ZohReport r;
  r.region = grid.region;
  r.budget = budget;
  r.over_budget = tau > budget;
  r.target_rate = 1.0 - 2.0 * lambda * gamma_split * tau;
  bool first = true;
  for (long t : grid.times) {
    for (const Vector& x : grid.states) {
      // Differencing needs one fixed integrator across the perturbed points.
      const int substeps = flow_map_auto(plant, x, tau * t, tau).substeps;
      const NominalMap g = zoh_discretize(plant, tau, substeps);
      const Matrix J = finite_difference_jacobian(g, x, t);
      const Matrix Mx = metric(x, tau * t);
      const Matrix Mn = metric(g(x, t), tau * (t + 1));
      Matrix S = J.transpose() * Mn * J - r.target_rate * Mx;
      S = 0.5 * (S + S.transpose()).eval();
      const double margin = max_eigenvalue(S);
      if (first || margin > r.worst_margin) {
        r.worst_margin = margin;
        r.witness_state = x;
        r.witness_time = t;
        first = false;
      }
      ++r.samples;
    }
  }
  r.pass = r.worst_margin <= 1e-8;
  return r;
}

}  // namespace adaptreg
