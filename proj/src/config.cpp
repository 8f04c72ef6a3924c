#include "adaptreg/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace adaptreg {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// One table drives parsing, dumping and the key list.
template <typename Visitor>
void visit_fields(ExperimentConfig& c, Visitor&& v) {
  v("experiment", c.experiment);
  v("law", c.law);
  v("horizons", c.horizons);
  v("n_rollouts", c.n_rollouts);
  v("delay", c.delay);
  v("noise_kind", c.noise_kind);
  v("noise_bound", c.noise_bound);
  v("noise_sigma", c.noise_sigma);
  v("noise_tau", c.noise_tau);
  v("seed", c.seed);
  v("initial_estimate", c.initial_estimate);
  v("radius", c.radius);
  v("regularizer", c.regularizer);
  v("op_norm_bound", c.op_norm_bound);
  v("newton_step", c.newton_step);
  v("gradient_bound", c.gradient_bound);
  v("features", c.features);
  v("alpha_norm", c.alpha_norm);
  v("x0", c.x0);
  v("state_independent_basis", c.state_independent_basis);
  v("n_trajectories", c.n_trajectories);
  v("baseline_horizon", c.baseline_horizon);
  v("initial_radius", c.initial_radius);
  v("cartpole_design", c.cartpole_design);
  v("custom_A", c.custom_A);
  v("custom_B", c.custom_B);
  v("custom_Y", c.custom_Y);
  v("custom_alpha", c.custom_alpha);
  v("lyapunov_rate", c.lyapunov_rate);
  v("contraction_rate", c.contraction_rate);
  v("lhs_samples", c.lhs_samples);
  v("zoh_Lf", c.zoh_Lf);
  v("zoh_Lpi", c.zoh_Lpi);
  v("zoh_LQ", c.zoh_LQ);
  v("zoh_rho", c.zoh_rho);
  v("zoh_mu", c.zoh_mu);
  v("zoh_lambda", c.zoh_lambda);
  v("zoh_L", c.zoh_L);
  v("zoh_LM", c.zoh_LM);
  v("zoh_D", c.zoh_D);
  v("gamma_split", c.gamma_split);
  v("output_dir", c.output_dir);
  v("trajectory_files", c.trajectory_files);
  v("jobs", c.jobs);
}

template <typename T>
void read_value(const json& j, const std::string& key, T& out) {
  try {
    out = j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError("config key '" + key + "': " + e.what());
  }
}

template <typename T>
void read_value(const json& j, const std::string& key, std::optional<T>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  T v{};
  read_value(j, key, v);
  out = std::move(v);
}

template <typename T>
struct unwrap {
  using type = T;
};
template <typename T>
struct unwrap<std::optional<T>> {
  using type = T;
};

// Integers must not silently truncate reals.
template <typename T>
struct element {
  using type = T;
};
template <typename T>
struct element<std::vector<T>> {
  using type = T;
};

template <typename T>
void check_integral(const json& j, const std::string& key) {
  using V = typename unwrap<T>::type;
  using E = typename element<V>::type;
  if constexpr (std::is_integral_v<E> && !std::is_same_v<E, bool>) {
    const auto bad = [](const json& v) { return !v.is_number_integer(); };
    if (j.is_null()) return;
    if (j.is_array() ? std::any_of(j.begin(), j.end(), bad) : bad(j))
      throw ConfigurationError("config key '" + key + "' must hold integers");
  }
}

template <typename T>
void write_value(ordered_json& j, const std::string& key, const T& v) {
  j[key] = v;
}

template <typename T>
void write_value(ordered_json& j, const std::string& key, const std::optional<T>& v) {
  if (v)
    j[key] = *v;
  else
    j[key] = nullptr;
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ConfigurationError("config key '" + key + "': " + why);
}

template <typename T>
bool one_of(const T& v, std::initializer_list<T> options) {
  return std::find(options.begin(), options.end(), v) != options.end();
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    ExperimentConfig c;
    visit_fields(c, [&](const char* name, auto&) { k.emplace_back(name); });
    return k;
  }();
  return keys;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
  const auto& keys = config_keys();
  for (const auto& item : j.items())
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end())
      throw ConfigurationError("config key '" + item.key() + "' is not recognized");

  ExperimentConfig c;
  visit_fields(c, [&](const char* name, auto& field) {
    const auto it = j.find(name);
    if (it == j.end()) return;
    using F = std::decay_t<decltype(field)>;
    check_integral<F>(*it, name);
    read_value(*it, name, field);
  });
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& config) {
  ordered_json j = ordered_json::object();
  ExperimentConfig c = config;
  visit_fields(c, [&](const char* name, auto& field) { write_value(j, name, field); });
  return j.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& c) {
  require(one_of<std::string>(c.experiment, {"cartpole", "limit_cycle", "scalar_suite", "custom"}),
          "experiment", "must be cartpole, limit_cycle, scalar_suite or custom");
  require(one_of<std::string>(c.law, {"vg", "ogd", "newton", "rls", "frozen"}), "law",
          "must be vg, ogd, newton, rls or frozen");
  require(!c.horizons.empty(), "horizons", "must not be empty");
  require(std::is_sorted(c.horizons.begin(), c.horizons.end()) && c.horizons.front() >= 1,
          "horizons", "must be positive and ascending");
  require(c.n_rollouts >= 1, "n_rollouts", "must be at least 1");
  require(c.delay >= 0, "delay", "must be nonnegative");
  require(one_of<std::string>(c.noise_kind, {"zero", "bounded_uniform_ball", "scaled_gaussian"}),
          "noise_kind", "must be zero, bounded_uniform_ball or scaled_gaussian");
  require(c.noise_bound >= 0.0, "noise_bound", "must be nonnegative");
  require(c.noise_sigma >= 0.0, "noise_sigma", "must be nonnegative");
  require(c.noise_tau > 0.0, "noise_tau", "must be positive");
  require(one_of<std::string>(c.initial_estimate, {"zero", "truth"}), "initial_estimate",
          "must be zero or truth");
  require(!c.radius || *c.radius > 0.0, "radius", "must be positive");
  require(!c.regularizer || *c.regularizer > 0.0, "regularizer", "must be positive");
  require(!c.op_norm_bound || *c.op_norm_bound > 0.0, "op_norm_bound", "must be positive");
  require(!c.newton_step || *c.newton_step >= 1.0, "newton_step", "must be at least 1");
  require(!c.gradient_bound || *c.gradient_bound > 0.0, "gradient_bound", "must be positive");
  require(!c.features || *c.features >= 1, "features", "must be at least 1");
  require(c.alpha_norm >= 0.0, "alpha_norm", "must be nonnegative");
  require(c.n_trajectories >= 1, "n_trajectories", "must be at least 1");
  require(c.baseline_horizon >= 1, "baseline_horizon", "must be at least 1");
  require(c.initial_radius > 0.0, "initial_radius", "must be positive");
  require(one_of<std::string>(c.cartpole_design, {"wrong", "true"}), "cartpole_design",
          "must be wrong or true");
  require(c.lhs_samples >= 0, "lhs_samples", "must be nonnegative");
  require(c.gamma_split > 0.0 && c.gamma_split < 1.0, "gamma_split", "must lie in (0, 1)");
  require(c.trajectory_files >= 0, "trajectory_files", "must be nonnegative");
  require(c.jobs >= 0, "jobs", "must be nonnegative");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  if (c.law == "vg")
    require(c.experiment != "limit_cycle", "law",
            "velocity gradient needs a Lyapunov certificate, which limit_cycle does not provide");
  if (c.experiment == "custom") {
    const std::size_t n = c.custom_A.size();
    require(n >= 1, "custom_A", "must be a nonempty square matrix");
    for (const auto& row : c.custom_A) require(row.size() == n, "custom_A", "must be square");
    require(c.custom_B.size() == n && !c.custom_B.front().empty(), "custom_B",
            "must have one row per state");
    const std::size_t d = c.custom_B.front().size();
    for (const auto& row : c.custom_B) require(row.size() == d, "custom_B", "rows differ in length");
    require(c.custom_Y.size() == d && !c.custom_Y.front().empty(), "custom_Y",
            "must have one row per input");
    const std::size_t p = c.custom_Y.front().size();
    for (const auto& row : c.custom_Y) require(row.size() == p, "custom_Y", "rows differ in length");
    require(c.custom_alpha.size() == p, "custom_alpha", "must have one entry per basis column");
  }
  if (c.x0) require(!c.x0->empty(), "x0", "must not be empty");
}

}  // namespace adaptreg
