#include "adaptreg/regret.hpp"

#include "adaptreg/parallel.hpp"
#include "adaptreg/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace adaptreg {
namespace {

void require_length(const TrajectoryRecord& r, long T) {
  if (T < 0) throw ConfigurationError("horizon must be nonnegative");
  if (r.horizon < T)
    throw ConfigurationError("record horizon " + std::to_string(r.horizon) +
                             " is shorter than T = " + std::to_string(T) +
                             (r.divergent ? " (the rollout diverged)" : ""));
}

template <typename F>
MeanSE aggregate(const std::vector<TrajectoryRecord>& records, long T, F per_record) {
  if (records.empty()) throw ConfigurationError("no records to aggregate");
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) values.push_back(per_record(r, T));
  return mean_and_se(values);
}

double contraction_factor(const IncrementalStabilityConstants& c) {
  if (!(c.rho < 1.0)) throw ConfigurationError("rho must be below 1");
  return c.gamma / (1.0 - c.rho);
}

BoundValue gate_m(double value, double M) {
  BoundValue b{value, true, ""};
  if (M < 1.0) {
    b.applicable = false;
    b.note = "requires M >= 1";
  }
  return b;
}

}  // namespace

MeanSE mean_and_se(const std::vector<double>& values) {
  MeanSE out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

double control_regret_sum(const TrajectoryRecord& record, long T) {
  require_length(record, T);
  double s = 0.0;
  for (long t = 0; t < T; ++t)
    s += record.states_adaptive.col(t).squaredNorm() - record.states_comparator.col(t).squaredNorm();
  return s;
}

double prediction_regret_sum(const TrajectoryRecord& record, long T) {
  require_length(record, T);
  double s = 0.0;
  for (long t = 0; t < T; ++t) s += 0.5 * record.prediction_errors(t) * record.prediction_errors(t);
  return s;
}

MeanSE control_regret(const std::vector<TrajectoryRecord>& records, long T) {
  return aggregate(records, T, control_regret_sum);
}

MeanSE prediction_regret(const std::vector<TrajectoryRecord>& records, long T) {
  return aggregate(records, T, prediction_regret_sum);
}

double compute_Bx(const IncrementalStabilityConstants& c, double x0_norm, double D, double M,
                  double W) {
  return c.beta * x0_norm + contraction_factor(c) * (2.0 * D * M * M + W);
}

RegretConstants make_regret_constants(const IncrementalStabilityConstants& c, double x0_norm,
                                      double D, double M, double W, double lambda, int p) {
  RegretConstants rc;
  rc.iss = c;
  rc.D = D;
  rc.M = M;
  rc.W = W;
  rc.G = gradient_bound(D, M, W);
  rc.Bx = compute_Bx(c, x0_norm, D, M, W);
  rc.lambda = lambda;
  rc.p = p;
  return rc;
}

double bound_thm1(const LyapunovCertificate& cert, const Vector& x0, double gradient_sq_sum,
                  double lambda, double D) {
  const double rho = cert.decrease_rate;
  return cert.value(x0, 0) / rho + 5.0 * std::sqrt(lambda) * D / rho +
         (3.0 * D / rho) * std::sqrt(gradient_sq_sum);
}

double bound_thm1(const LyapunovCertificate& cert, const TrajectoryRecord& record, long T,
                  double lambda, double D) {
  if (record.law != "vg")
    throw ConfigurationError("the data-dependent bound needs a velocity-gradient record, got '" +
                             record.law + "'");
  require_length(record, T);
  double s = 0.0;
  for (long t = 0; t < T; ++t) s += record.gradient_sq(t);
  return bound_thm1(cert, record.states_adaptive.col(0), s, lambda, D);
}

double bound_thm2(const LyapunovCertificate& cert, const Vector& x0, double D, double lambda,
                  double M) {
  const double rho = cert.decrease_rate;
  const double head = cert.value(x0, 0) / rho + 5.0 * std::sqrt(lambda) * D / rho;
  const double lf2 = cert.nominal_lipschitz * cert.nominal_lipschitz;
  const double tail = 27.0 * D * D / (rho * rho) * std::pow(M, 4) * cert.grad_lipschitz *
                      cert.grad_lipschitz * std::max(lf2, 2.0 * rho / cert.strong_convexity);
  return 1.5 * head + tail;
}

double bound_thm3(const IncrementalStabilityConstants& c, double Bx, long T,
                  double prediction_sq_sum) {
  return 2.0 * Bx * contraction_factor(c) * std::sqrt(static_cast<double>(T)) *
         std::sqrt(prediction_sq_sum);
}

BoundValue bound_cor1(const RegretConstants& c, long T) {
  const double v = 2.0 * std::sqrt(6.0) * c.Bx * contraction_factor(c.iss) * std::sqrt(c.G * c.D) *
                   std::pow(static_cast<double>(T), 0.75);
  return {v, true, ""};
}

BoundValue bound_cor2(const RegretConstants& c, long T) {
  const double Td = static_cast<double>(T);
  const double m4 = std::pow(c.M, 4);
  const double inner =
      4.0 * c.D * c.D * (c.lambda + m4) + c.p * c.G * c.G * std::log1p(m4 * Td / c.lambda);
  return gate_m(2.0 * c.Bx * contraction_factor(c.iss) * std::sqrt(Td) * std::sqrt(inner), c.M);
}

namespace {

double delay_constant_terms(const RegretConstants& c, int k) {
  const double one_minus = 1.0 - c.iss.rho;
  return k * c.Bx * c.Bx + 2.0 * c.Bx * c.M * c.M * c.D * c.iss.gamma / (one_minus * one_minus);
}

void gate_delay(BoundValue& b, long T, int k) {
  if (k < 0) throw ConfigurationError("delay must be nonnegative");
  if (T < k) {
    b.applicable = false;
    b.note = b.note.empty() ? "requires T >= k" : b.note + "; requires T >= k";
  }
}

}  // namespace

BoundValue bound_thm4(const RegretConstants& c, long T, int k) {
  const double Td = static_cast<double>(T);
  const double cf = contraction_factor(c.iss);
  const double v = delay_constant_terms(c, k) +
                   2.0 * std::sqrt(6.0) * c.Bx * cf * std::sqrt(c.G * c.D) * std::pow(Td, 0.75) +
                   4.0 * c.Bx * cf * c.M * c.M * c.D * k * std::sqrt(Td);
  BoundValue b{v, true, ""};
  gate_delay(b, T, k);
  return b;
}

BoundValue bound_thm5(const RegretConstants& c, long T, int k) {
  const double Td = static_cast<double>(T);
  const double cf = contraction_factor(c.iss);
  const double delay_term = 2.0 * c.Bx * cf * c.G * k *
                            std::sqrt(c.p * Td / c.lambda * std::log1p(c.M * c.M * Td / c.lambda));
  const BoundValue base = bound_cor2(c, T);
  BoundValue b{delay_constant_terms(c, k) + delay_term + base.value, base.applicable, base.note};
  gate_delay(b, T, k);
  return b;
}

double bound_oco_gd(double G, double D, long T) {
  return 3.0 * G * D * std::sqrt(static_cast<double>(T));
}

BoundValue bound_oco_newton(double D, double eta, double lambda, double M, double Y_bound, int p,
                            long T) {
  const double v = 2.0 * D * D / eta * (lambda + M * M) +
                   eta * p / 2.0 * (D * M + Y_bound) * (D * M + Y_bound) *
                       std::log1p(M * M * static_cast<double>(T) / lambda);
  BoundValue b{v, true, ""};
  if (eta < 1.0) {
    b.applicable = false;
    b.note = "requires eta >= 1";
  }
  return b;
}

RegretReport run_regret_experiment(const RegretExperiment& ex) {
  if (ex.horizons.empty()) throw ConfigurationError("at least one horizon is required");
  if (!std::is_sorted(ex.horizons.begin(), ex.horizons.end()) || ex.horizons.front() < 1)
    throw ConfigurationError("horizons must be positive and sorted ascending");
  if (ex.n_rollouts < 1) throw ConfigurationError("n_rollouts must be at least 1");
  const auto started = std::chrono::steady_clock::now();

  const long T = ex.horizons.back();
  const std::unique_ptr<AdaptationLaw> law = make_law(ex.law, ex.model);
  const std::size_t n = static_cast<std::size_t>(ex.n_rollouts);
  const std::size_t H = ex.horizons.size();

  RegretReport rep;
  rep.horizons = ex.horizons;
  rep.n_rollouts = ex.n_rollouts;
  for (std::size_t i = 0; i < n; ++i) rep.seeds.push_back(expand_seed(ex.noise.seed, i));
  rep.control_raw.assign(n, std::vector<double>(H));
  rep.prediction_raw.assign(n, std::vector<double>(H));
  std::vector<std::vector<double>> grad_prefix(n, std::vector<double>(H));
  if (ex.keep_records) rep.records.resize(n);

  RolloutOptions opts;
  opts.keep_estimates = ex.keep_estimates;
  parallel_for(n, resolve_jobs(ex.jobs), [&](std::size_t i) {
    NoiseSpec noise = ex.noise;
    noise.seed = rep.seeds[i];
    TrajectoryRecord rec = rollout_coupled(ex.model, ex.x0, T, *law, noise, ex.delay, opts);
    if (rec.divergent)
      throw NumericalDivergence("adaptive", rec.divergence_step,
                                "rollout " + std::to_string(i) + " left the divergence ball");
    // Prefix sums at each horizon, accumulated in one pass.
    double c = 0.0, p = 0.0, g = 0.0;
    std::size_t h = 0;
    for (long t = 0; t < T && h < H; ++t) {
      c += rec.states_adaptive.col(t).squaredNorm() - rec.states_comparator.col(t).squaredNorm();
      p += 0.5 * rec.prediction_errors(t) * rec.prediction_errors(t);
      g += rec.gradient_sq(t);
      while (h < H && ex.horizons[h] == t + 1) {
        rep.control_raw[i][h] = c;
        rep.prediction_raw[i][h] = p;
        grad_prefix[i][h] = g;
        ++h;
      }
    }
    if (ex.keep_records) rep.records[i] = std::move(rec);
  });

  for (std::size_t h = 0; h < H; ++h) {
    std::vector<double> cs(n), ps(n);
    for (std::size_t i = 0; i < n; ++i) {
      cs[i] = rep.control_raw[i][h];
      ps[i] = rep.prediction_raw[i][h];
    }
    rep.control.push_back(mean_and_se(cs));
    rep.prediction.push_back(mean_and_se(ps));
  }

  const double D = ex.law.radius.value_or(ex.model.param_radius);
  const double M = ex.model.op_norm_bound;
  const int k = ex.delay.value_or(0);

  if (ex.law.kind == LawKind::vg && ex.lyapunov) {
    auto& thm1 = rep.bounds["thm1"];
    auto& thm2 = rep.bounds["thm2"];
    for (std::size_t h = 0; h < H; ++h) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        mean += bound_thm1(*ex.lyapunov, ex.x0, grad_prefix[i][h], ex.law.regularizer, D);
      thm1.push_back({mean / n, true, ""});
      thm2.push_back({bound_thm2(*ex.lyapunov, ex.x0, D, ex.law.regularizer, M), true, ""});
    }
  }

  const std::optional<double> W = ex.noise.almost_sure_bound();
  if (ex.iss && W) {
    rep.constants =
        make_regret_constants(*ex.iss, ex.x0.norm(), D, M, *W, ex.law.regularizer, ex.model.param_dim);
    const RegretConstants& rc = *rep.constants;
    auto& thm3 = rep.bounds["thm3"];
    for (std::size_t h = 0; h < H; ++h)
      thm3.push_back({bound_thm3(rc.iss, rc.Bx, ex.horizons[h], 2.0 * rep.prediction[h].mean), true,
                      "uses the Monte-Carlo mean prediction sum"});
    for (std::size_t h = 0; h < H; ++h) {
      const long Th = ex.horizons[h];
      if (ex.law.kind == LawKind::ogd) {
        if (ex.delay)
          rep.bounds["thm4"].push_back(bound_thm4(rc, Th, k));
        else
          rep.bounds["cor1"].push_back(bound_cor1(rc, Th));
      } else if (ex.law.kind == LawKind::newton) {
        if (ex.delay)
          rep.bounds["thm5"].push_back(bound_thm5(rc, Th, k));
        else
          rep.bounds["cor2"].push_back(bound_cor2(rc, Th));
      }
    }
  }

  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigurationError("need at least two points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nullopt;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace adaptreg
