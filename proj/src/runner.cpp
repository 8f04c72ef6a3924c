#include "adaptreg/runner.hpp"

#include "adaptreg/bench.hpp"
#include "adaptreg/c2d.hpp"
#include "adaptreg/linalg.hpp"
#include "adaptreg/random.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace adaptreg {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kDefaultCartpoleFeatures = 400;
constexpr int kDefaultLimitCycleFeatures = 200;

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_list(const Vector& v) { return {v.data(), v.data() + v.size()}; }

NoiseSpec noise_from(const ExperimentConfig& c) {
  NoiseSpec n;
  n.kind = noise_kind_from_string(c.noise_kind);
  n.bound = c.noise_bound;
  n.gaussian_scale = c.noise_sigma;
  n.step = c.noise_tau;
  n.seed = c.seed;
  return n;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

ordered_json report_json(const std::string& name, const CheckReport& r) {
  ordered_json j;
  j["name"] = name;
  j["pass"] = r.pass;
  j["worst_margin"] = number_or_null(r.worst_margin);
  j["samples"] = r.samples;
  j["region"] = r.region;
  if (r.witness_state.size() > 0) {
    j["witness_state"] = to_list(r.witness_state);
    j["witness_time"] = r.witness_time;
  }
  return j;
}

ordered_json budget_json(const std::string& name, const ZohBudget& b) {
  ordered_json j;
  j["name"] = name;
  j["pass"] = b.applicable;
  j["tau"] = b.tau;
  ordered_json terms = ordered_json::object();
  for (const auto& [term, value] : b.terms) terms[term] = value;
  j["terms"] = terms;
  if (!b.note.empty()) j["note"] = b.note;
  return j;
}

struct CheckList {
  ordered_json items = ordered_json::array();
  bool pass = true;
  void add(ordered_json item) {
    pass = pass && item.value("pass", true);
    items.push_back(std::move(item));
  }
};

CheckList run_checks(const ExperimentConfig& c, const ResolvedExperiment& ex) {
  CheckList list;

  const ModelCheck mc = validate_model(ex.model, ex.grid.states, ex.grid.times);
  ordered_json m;
  m["name"] = "model";
  m["pass"] = mc.pass;
  m["max_fixed_point_error"] = mc.max_fixed_point_error;
  m["max_input_matrix_norm"] = mc.max_input_matrix_norm;
  m["max_basis_norm"] = mc.max_basis_norm;
  m["param_norm"] = mc.param_norm;
  m["failures"] = mc.failures;
  list.add(m);

  if (ex.lyapunov) {
    const LyapunovCertificate& q = *ex.lyapunov;
    ordered_json d = report_json("lyapunov_decrease", check_lyapunov_decrease(q, ex.model.nominal, ex.grid));
    d["rho"] = q.decrease_rate;
    list.add(d);
    list.add(report_json("lyapunov_gradient", check_lyapunov_gradient(q, ex.grid)));
  }

  if (ex.contraction) {
    const ContractionCertificate& cc = *ex.contraction;
    const ContractionReport r =
        check_contraction(cc, ex.model.nominal, ex.grid, ex.jacobian, ex.contraction_directions);
    ordered_json j = report_json("contraction", r);
    j["rate"] = cc.rate;
    j["minimal_rate"] = r.minimal_rate;
    j["directions"] = ex.contraction_directions ? "restricted" : "full";
    if (ex.contraction_directions) {
      // The unrestricted rate, for information only.
      const ContractionReport full = check_contraction(cc, ex.model.nominal, ex.grid, ex.jacobian);
      j["full_metric_minimal_rate"] = full.minimal_rate;
    }
    list.add(j);
    list.add(report_json("metric_bounds", check_metric_bounds(cc, ex.grid)));
    if (const auto W = ex.noise.almost_sure_bound()) {
      ordered_json pj;
      pj["name"] = "perturbed_contraction";
      const auto rate = perturbed_contraction_rate(cc, *W);
      pj["pass"] = rate.has_value();
      pj["W"] = *W;
      pj["rate"] = rate ? ordered_json(*rate) : ordered_json(nullptr);
      list.add(pj);
    }
  }

  if (ex.iss) {
    ordered_json j;
    j["name"] = "iss_constants";
    j["pass"] = ex.iss->rho > 0.0 && ex.iss->rho < 1.0;
    j["beta"] = ex.iss->beta;
    j["rho"] = ex.iss->rho;
    j["gamma"] = ex.iss->gamma;
    list.add(j);
  }

  if (c.zoh_Lf && c.zoh_Lpi && c.zoh_LQ && c.zoh_rho && c.zoh_mu) {
    const ZohBudget b = tau_budget_lyapunov(*c.zoh_Lf, *c.zoh_Lpi, *c.zoh_LQ, *c.zoh_rho,
                                            *c.zoh_mu, c.gamma_split);
    list.add(budget_json("zoh_budget_lyapunov", b));
    if (c.experiment == "scalar_suite") {
      // The continuous decay plant sampled at exactly the budget.
      const ContinuousPlant plant = decay_plant();
      const SampleGrid grid = make_sample_grid(Vector::Constant(1, -2.0), Vector::Constant(1, 2.0),
                                               static_cast<std::size_t>(c.lhs_samples), c.seed,
                                               {Vector::Constant(1, 1.0)});
      const auto Q = [](const Vector& x, double) { return x.squaredNorm(); };
      const ZohReport r =
          verify_zoh_lyapunov(plant, Q, *c.zoh_rho, b.tau, c.gamma_split, grid, b.tau);
      ordered_json j = report_json("zoh_lyapunov_decay_plant", r);
      j["tau"] = b.tau;
      j["target_rate"] = r.target_rate;
      list.add(j);
    }
  }
  if (c.zoh_Lf && c.zoh_Lpi && c.zoh_LM && c.zoh_lambda && c.zoh_mu && c.zoh_L && c.zoh_D) {
    list.add(budget_json("zoh_budget_contraction",
                         tau_budget_contraction(*c.zoh_Lf, *c.zoh_Lpi, *c.zoh_LM, *c.zoh_lambda,
                                                *c.zoh_mu, *c.zoh_L, *c.zoh_D, c.gamma_split)));
  }
  return list;
}

ordered_json summary_header(const ExperimentConfig& c) {
  ordered_json j;
  j["config"] = ordered_json::parse(dump_config(c));
  return j;
}

std::string csv_header_vector(const std::string& prefix, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += "," + prefix + std::to_string(i);
  return s;
}

void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& r) {
  const int n = static_cast<int>(r.states_adaptive.rows());
  const int d = static_cast<int>(r.inputs.rows());
  std::string text = "t" + csv_header_vector("xa_", n) + csv_header_vector("xc_", n) +
                     csv_header_vector("u_", d) + ",prediction_error,estimate_norm\n";
  for (long t = 0; t < r.horizon; ++t) {
    text += std::to_string(t);
    for (int i = 0; i < n; ++i) text += "," + format_number(r.states_adaptive(i, t));
    for (int i = 0; i < n; ++i) text += "," + format_number(r.states_comparator(i, t));
    for (int i = 0; i < d; ++i) text += "," + format_number(r.inputs(i, t));
    text += "," + format_number(r.prediction_errors(t));
    text += "," + format_number(r.estimate_norms(t));
    text += "\n";
  }
  write_text(path, text);
}

int run_cartpole(const ExperimentConfig& c, const fs::path& out) {
  CartpoleStudyConfig sc;
  sc.setup.features = c.features.value_or(kDefaultCartpoleFeatures);
  if (c.radius) sc.setup.radius = *c.radius;
  if (c.regularizer) sc.setup.regularizer = *c.regularizer;
  if (c.cartpole_design == "true") sc.setup.design = sc.setup.truth;
  sc.setup.seed = c.seed;
  sc.n_trajectories = c.n_trajectories;
  sc.horizon = c.horizons.back();
  sc.baseline_horizon = c.baseline_horizon;
  sc.initial_radius = c.initial_radius;
  sc.jobs = c.jobs;
  const CartpoleStudy study = run_cartpole_study(sc);

  std::string text = "trajectory,cost,divergent,divergence_step,baseline_divergent,"
                     "baseline_divergence_step,baseline_max_norm\n";
  for (std::size_t i = 0; i < study.runs.size(); ++i) {
    const CartpoleRun& r = study.runs[i];
    text += std::to_string(i) + "," + format_number(r.cost) + "," + (r.divergent ? "1" : "0") +
            "," + std::to_string(r.divergence_step) + "," + (r.baseline_divergent ? "1" : "0") +
            "," + std::to_string(r.baseline_divergence_step) + "," +
            format_number(r.baseline_max_norm) + "\n";
  }
  write_text(out / "cartpole_costs.csv", text);

  const CartpoleExperiment ex = build_cartpole_experiment(sc.setup);
  const auto law = make_law(ex.law, ex.model);
  RolloutOptions opts;
  opts.keep_estimates = false;
  const int files = std::min<int>(c.trajectory_files, static_cast<int>(study.runs.size()));
  for (int i = 0; i < files; ++i) {
    TrajectoryRecord rec = rollout_coupled(ex.model, study.runs[i].initial, sc.horizon, *law,
                                           NoiseSpec::zero(), std::nullopt, opts);
    write_trajectory_csv(out / ("trajectory_" + std::to_string(i) + ".csv"), rec);
  }

  ordered_json s = summary_header(c);
  s["experiment"] = "cartpole";
  s["n_trajectories"] = study.runs.size();
  s["horizon"] = sc.horizon;
  s["fraction_cost_below_0.1"] = study.fraction_below_tenth;
  s["fraction_cost_below_1"] = study.fraction_below_one;
  s["baseline_horizon"] = sc.baseline_horizon;
  s["baseline_divergent_fraction"] = study.baseline_divergent_fraction;
  s["design_closed_loop_radius"] = ex.design_closed_loop_radius;
  s["true_closed_loop_radius"] = ex.true_closed_loop_radius;
  s["alpha_norm"] = ex.model.true_param.norm();
  s["runtime_seconds"] = study.runtime_seconds;
  write_json(out / "summary.json", s);
  return kExitOk;
}

int run_regret(const ExperimentConfig& c, const fs::path& out) {
  const ResolvedExperiment ex = resolve_experiment(c);
  const CheckList checks = run_checks(c, ex);

  RegretExperiment re;
  re.model = ex.model;
  re.x0 = ex.x0;
  re.law = ex.law;
  re.noise = ex.noise;
  re.horizons = c.horizons;
  re.n_rollouts = c.n_rollouts;
  if (c.delay > 0) re.delay = c.delay;
  re.jobs = c.jobs;
  re.iss = ex.iss;
  re.lyapunov = ex.lyapunov;
  re.keep_records = c.trajectory_files > 0;
  const RegretReport rep = run_regret_experiment(re);

  std::string text =
      "T,control_regret_mean,control_regret_se,prediction_regret_mean,prediction_regret_se";
  for (const auto& [id, values] : rep.bounds) text += ",bound_" + id;
  text += "\n";
  for (std::size_t h = 0; h < rep.horizons.size(); ++h) {
    text += std::to_string(rep.horizons[h]) + "," + format_number(rep.control[h].mean) + "," +
            format_number(rep.control[h].se) + "," + format_number(rep.prediction[h].mean) + "," +
            format_number(rep.prediction[h].se);
    for (const auto& [id, values] : rep.bounds) text += "," + format_number(values[h].value);
    text += "\n";
  }
  write_text(out / "regret.csv", text);

  const int files = std::min<int>(c.trajectory_files, static_cast<int>(rep.records.size()));
  for (int i = 0; i < files; ++i)
    write_trajectory_csv(out / ("trajectory_" + std::to_string(rep.records[i].seed) + ".csv"),
                         rep.records[i]);

  ordered_json s = summary_header(c);
  s["experiment"] = c.experiment;
  s["law"] = c.law;
  s["n_rollouts"] = rep.n_rollouts;
  s["seeds"] = rep.seeds;
  s["horizons"] = rep.horizons;
  std::vector<double> T, control, prediction;
  for (std::size_t h = 0; h < rep.horizons.size(); ++h) {
    T.push_back(static_cast<double>(rep.horizons[h]));
    control.push_back(rep.control[h].mean);
    prediction.push_back(rep.prediction[h].mean);
  }
  if (T.size() >= 2) {
    const auto cs = loglog_slope(T, control);
    const auto ps = loglog_slope(T, prediction);
    s["control_regret_loglog_slope"] = cs ? ordered_json(*cs) : ordered_json(nullptr);
    s["prediction_regret_loglog_slope"] = ps ? ordered_json(*ps) : ordered_json(nullptr);
  }
  ordered_json bounds = ordered_json::object();
  for (const auto& [id, values] : rep.bounds) {
    ordered_json arr = ordered_json::array();
    for (const BoundValue& b : values) {
      ordered_json v;
      v["value"] = number_or_null(b.value);
      v["applicable"] = b.applicable;
      if (!b.note.empty()) v["note"] = b.note;
      arr.push_back(v);
    }
    bounds[id] = arr;
  }
  s["bounds"] = bounds;
  if (rep.constants) {
    const RegretConstants& k = *rep.constants;
    s["constants"] = {{"beta", k.iss.beta}, {"rho", k.iss.rho},   {"gamma", k.iss.gamma},
                      {"Bx", k.Bx},         {"D", k.D},           {"M", k.M},
                      {"W", k.W},           {"G", k.G},           {"lambda", k.lambda},
                      {"p", k.p}};
  }
  s["checks"] = checks.items;
  s["checks_pass"] = checks.pass;
  s["runtime_seconds"] = rep.runtime_seconds;
  write_json(out / "summary.json", s);
  return checks.pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& c) {
  validate_config(c);
  ResolvedExperiment ex;
  ex.noise = noise_from(c);
  const auto lhs = static_cast<std::size_t>(c.lhs_samples);

  if (c.experiment == "scalar_suite") {
    ScalarSuite s = build_scalar_suite();
    ex.model = s.model;
    ex.lyapunov = s.lyapunov;
    ex.contraction = s.contraction;
    ex.jacobian = [](const Vector&, long) -> Matrix { return Matrix::Constant(1, 1, 0.5); };
    ex.x0 = Vector::Ones(1);
    ex.grid = make_sample_grid(Vector::Constant(1, -2.0), Vector::Constant(1, 2.0), lhs, c.seed,
                               {Vector::Zero(1), Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)});
  } else if (c.experiment == "limit_cycle") {
    LimitCycleParams lp;
    lp.tau = c.noise_tau;
    lp.sigma = c.noise_sigma;
    lp.features = c.features.value_or(kDefaultLimitCycleFeatures);
    if (c.radius) lp.radius = *c.radius;
    lp.alpha_norm = c.alpha_norm;
    lp.seed = c.seed;
    lp.state_independent = c.state_independent_basis;
    LimitCycleExperiment lc = build_limit_cycle_experiment(lp);
    ex.model = lc.model;
    ex.contraction = lc.contraction;
    ex.contraction_directions = lc.radial;
    const double tau = lp.tau;
    ex.jacobian = [tau](const Vector& z, long) { return limit_cycle_jacobian(tau, z); };
    ex.x0 = lc.x0;
    ex.grid = annulus_grid(0.5, 2.0, 32, 128);
  } else if (c.experiment == "custom") {
    const Matrix A = to_matrix(c.custom_A);
    const Matrix B = to_matrix(c.custom_B);
    const Matrix Y = to_matrix(c.custom_Y);
    const int n = static_cast<int>(A.rows());
    SystemModel& m = ex.model;
    m.name = "custom";
    m.state_dim = n;
    m.input_dim = static_cast<int>(B.cols());
    m.param_dim = static_cast<int>(Y.cols());
    m.nominal = [A](const Vector& x, long) -> Vector { return A * x; };
    m.input_matrix = [B](const Vector&, long) { return B; };
    m.basis = [Y](const Vector&, long) { return Y; };
    m.true_param = to_vector(c.custom_alpha);
    m.param_radius = c.radius.value_or(std::max(1.0, m.true_param.norm()));
    m.op_norm_bound = std::max({1.0, spectral_norm(B), spectral_norm(Y)});
    m.y_state_dependent = false;
    ex.x0 = Vector::Ones(n);
    ex.jacobian = [A](const Vector&, long) { return A; };
    ex.grid = make_sample_grid(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0), lhs, c.seed,
                               {Vector::Zero(n)});
    // ||A|| < 1 certifies both Q = ||x||^2 (rho = 1 - ||A||^2) and the
    // identity metric (gamma = ||A||^2).
    const double a = spectral_norm(A);
    if (a < 1.0) {
      LyapunovCertificate q;
      q.value = [](const Vector& x, long) { return x.squaredNorm(); };
      q.gradient = [](const Vector& x, long) -> Vector { return 2.0 * x; };
      q.decrease_rate = 1.0 - a * a;
      q.strong_convexity = 2.0;
      q.grad_lipschitz = 2.0;
      q.nominal_lipschitz = a;
      ex.lyapunov = q;
      ContractionCertificate cc;
      cc.metric = [n](const Vector&, long) -> Matrix { return Matrix::Identity(n, n); };
      cc.rate = a * a;
      cc.metric_lower = cc.metric_upper = 1.0;
      cc.metric_lipschitz = 0.0;
      cc.jacobian_bound = a;
      cc.region = "all of R^n";
      ex.contraction = cc;
    }
  } else {
    throw ConfigurationError("config key 'experiment': '" + c.experiment +
                             "' has no regret experiment (use the cartpole study)");
  }

  if (c.op_norm_bound) ex.model.op_norm_bound = *c.op_norm_bound;
  if (c.radius) ex.model.param_radius = *c.radius;
  if (c.x0) {
    if (static_cast<int>(c.x0->size()) != ex.model.state_dim)
      throw ConfigurationError("config key 'x0': expected " + std::to_string(ex.model.state_dim) +
                               " entries");
    ex.x0 = to_vector(*c.x0);
  }
  if (ex.model.true_param.norm() > ex.model.param_radius + 1e-12)
    throw ConfigurationError("config key 'radius': ||alpha|| exceeds D");
  if (c.delay > 0 && ex.model.y_state_dependent)
    throw ConfigurationError(
        "config key 'delay': delayed inputs need a state-independent basis "
        "(set state_independent_basis)");

  if (ex.lyapunov && c.lyapunov_rate) ex.lyapunov->decrease_rate = *c.lyapunov_rate;
  if (ex.contraction && c.contraction_rate) ex.contraction->rate = *c.contraction_rate;
  if (ex.contraction) ex.iss = e_delta_iss_from_contraction(*ex.contraction);

  LawConfig& law = ex.law;
  law.kind = law_kind_from_string(c.law);
  law.radius = ex.model.param_radius;
  law.regularizer = c.regularizer.value_or(1.0);
  law.newton_step = c.newton_step.value_or(1.0);
  law.gradient_bound = c.gradient_bound;
  law.noise_bound = c.noise_bound;
  if (c.initial_estimate == "truth") law.initial = ex.model.true_param;
  if (law.kind == LawKind::vg) {
    if (!ex.lyapunov)
      throw ConfigurationError("config key 'law': velocity gradient needs a Lyapunov certificate, "
                               "which this experiment does not provide");
    law.lyapunov_gradient = ex.lyapunov->gradient;
  }
  return ex;
}

int run_experiment(const ExperimentConfig& config, const fs::path& out, std::ostream& err) {
  try {
    validate_config(config);
    fs::create_directories(out);
    if (config.experiment == "cartpole") return run_cartpole(config, out);
    return run_regret(config, out);
  } catch (const ConfigurationError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CertificateError& e) {
    err << "certificate error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const fs::filesystem_error& e) {
    err << "configuration error: output directory: " << e.what() << "\n";
    return kExitConfig;
  }
}

int verify_experiment(const ExperimentConfig& config, const fs::path& out, std::ostream& err) {
  try {
    validate_config(config);
    fs::create_directories(out);
    CheckList checks;
    if (config.experiment == "cartpole") {
      CartpoleSetup setup;
      setup.features = config.features.value_or(kDefaultCartpoleFeatures);
      if (config.radius) setup.radius = *config.radius;
      if (config.cartpole_design == "true") setup.design = setup.truth;
      setup.seed = config.seed;
      CartpoleExperiment cp = build_cartpole_experiment(setup);
      if (config.lyapunov_rate) cp.lyapunov.decrease_rate = *config.lyapunov_rate;
      const SampleGrid grid =
          make_sample_grid(Vector::Constant(4, -0.1), Vector::Constant(4, 0.1),
                           static_cast<std::size_t>(config.lhs_samples), config.seed,
                           {Vector::Zero(4)});
      ordered_json d =
          report_json("lyapunov_decrease", check_lyapunov_decrease(cp.lyapunov, cp.model.nominal, grid));
      d["rho"] = cp.lyapunov.decrease_rate;
      checks.add(d);
      checks.add(report_json("lyapunov_gradient", check_lyapunov_gradient(cp.lyapunov, grid)));
      ordered_json lq;
      lq["name"] = "design_closed_loop";
      lq["pass"] = cp.design_closed_loop_radius < 1.0;
      lq["spectral_radius"] = cp.design_closed_loop_radius;
      checks.add(lq);
      ExperimentConfig zoh_only = config;
      ResolvedExperiment empty;
      empty.model = cp.model;
      empty.grid = grid;
      empty.noise = NoiseSpec::zero();
      for (auto& item : run_checks(zoh_only, empty).items) checks.add(item);
    } else {
      const ResolvedExperiment ex = resolve_experiment(config);
      checks = run_checks(config, ex);
    }
    ordered_json v = summary_header(config);
    v["checks"] = checks.items;
    v["pass"] = checks.pass;
    write_json(out / "verify.json", v);
    if (!checks.pass) err << "verification failed; see verify.json\n";
    return checks.pass ? kExitOk : kExitCheckFailed;
  } catch (const ConfigurationError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CertificateError& e) {
    err << "certificate error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const fs::filesystem_error& e) {
    err << "configuration error: output directory: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace adaptreg
