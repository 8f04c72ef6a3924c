#pragma once

#include "adaptreg/dynamics.hpp"
#include "adaptreg/stability.hpp"
#include "adaptreg/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace adaptreg {

/// Continuous-time plant xdot = f(x, u, s) under a policy u = pi(x, s), with
/// its claimed regularity constants (L_f bounds the first and second
/// derivatives of f, L_pi the policy Jacobian).
struct ContinuousPlant {
  int state_dim = 0;
  std::function<Vector(const Vector& x, const Vector& u, double s)> field;
  std::function<Vector(const Vector& x, double s)> policy;
  double Lf = 1.0;
  double Lpi = 1.0;
};

/// Checks f(0, 0, s) = 0 and pi(0, s) = 0 at the probe times.
bool check_regular_equilibrium(const ContinuousPlant& plant, const std::vector<double>& times);

/// Solution at s + tau of xi' = f(xi, pi(x, s), t), xi(s) = x (the input is
/// held at its sampled value), by classical RK4 with `substeps` equal steps.
Vector flow_map(const ContinuousPlant& plant, const Vector& x, double s, double tau, int substeps);

struct FlowResult {
  Vector state;
  int substeps = 0;
  bool converged = false;
};

/// flow_map starting at 16 substeps and doubling until two successive
/// answers agree to 1e-9 relative, capped at 1024.
FlowResult flow_map_auto(const ContinuousPlant& plant, const Vector& x, double s, double tau);

/// g(x, t) = Phi(x, tau t, tau (t + 1)). With no substep count the
/// adaptive refinement of flow_map_auto is used.
NominalMap zoh_discretize(const ContinuousPlant& plant, double tau,
                          std::optional<int> substeps = std::nullopt);

/// A sampling-period budget: the minimum of its named terms. `applicable`
/// is false when a hypothesis on the constants fails; the value is still
/// the minimum of the terms.
struct ZohBudget {
  double tau = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  bool applicable = true;
  std::string note;
};

/// min{1/L_f, 1/(gamma rho), 2(1-gamma) rho mu / (895 L_Q L_f^2 L_pi^2)};
/// needs min{L_f, L_pi} >= 1 and L_Q >= 1.
ZohBudget tau_budget_lyapunov(double Lf, double Lpi, double LQ, double rho, double mu,
                              double gamma_split = 0.5);

/// min{1/L_f, 1/(2 lambda gamma), 2 lambda (1-gamma) mu / (1463 D^2 L L_M L_f^2 L_pi^2)};
/// needs min{L_f, L_pi} >= 1, min{L, L_M} >= 1 and D >= 1.
ZohBudget tau_budget_contraction(double Lf, double Lpi, double LM, double lambda, double mu,
                                 double L, double D, double gamma_split = 0.5);

struct EulerErrorReport {
  double euler_lhs = 0.0;  // ||Phi(x,s,s+tau) - (x + tau f(x, pi(x,s), s))||
  double euler_rhs = 0.0;  // 5 tau^2 L_f^2 L_pi e^{L_f tau} ||x||
  double flow_lhs = 0.0;   // ||Phi(x,s,s+tau) - x||
  double flow_rhs = 0.0;   // (1 + 3 L_pi)(e^{L_f tau} - 1) ||x||
  bool pass = true;
};

EulerErrorReport verify_euler_error(const ContinuousPlant& plant, const Vector& x, double s,
                                    double tau);

struct ZohReport : CheckReport {
  double budget = 0.0;
  bool over_budget = false;
  double target_rate = 0.0;  // 1 - gamma tau rho, or 1 - 2 lambda gamma tau
};

/// Checks V(g(x,t), t+1) <= (1 - gamma tau rho) V(x,t) with V(x,t) = Q(x, tau t)
/// on the grid. The margin is the largest violation scaled by max(1, V(x,t)).
ZohReport verify_zoh_lyapunov(const ContinuousPlant& plant,
                              const std::function<double(const Vector&, double)>& Q, double rho,
                              double tau, double gamma_split, const SampleGrid& grid,
                              double budget);

/// Checks J_g' V(g(x,t), t+1) J_g <= (1 - 2 lambda gamma tau) V(x,t) with
/// V(x,t) = M(x, tau t) on the grid (meant for points with ||x|| <= D).
ZohReport verify_zoh_contraction(const ContinuousPlant& plant,
                                 const std::function<Matrix(const Vector&, double)>& metric,
                                 double lambda, double tau, double gamma_split,
                                 const SampleGrid& grid, double budget);

}  // namespace adaptreg
