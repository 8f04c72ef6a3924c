#include "adaptreg/c2d.hpp"
#include "adaptreg/regret.hpp"
#include "adaptreg/runner.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace adaptreg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("adaptreg_runner_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes the config and runs the CLI; returns its exit status.
int cli(const std::string& command, const fs::path& dir, const std::string& config,
        const std::string& extra = "") {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << config;
  const std::string line = std::string(ADAPTREG_CLI) + " " + command + " " + path.string() +
                           " --out " + (dir / "out").string() + " " + extra + " 2> " +
                           (dir / "stderr.txt").string();
  const int status = std::system(line.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const char* kFrozen = R"({
  "experiment": "scalar_suite", "law": "frozen", "initial_estimate": "truth",
  "horizons": [4, 16, 64], "n_rollouts": 3, "noise_bound": 0.2, "jobs": 2
})";

TEST(Cli, FrozenOracleWritesZeroRegret) {
  const fs::path dir = scratch("frozen");
  ASSERT_EQ(cli("run", dir, kFrozen), 0) << slurp(dir / "stderr.txt");
  const auto rows = read_csv(dir / "out" / "regret.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0][0], "T");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(std::stod(rows[i][1]), 0.0);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
}

TEST(Cli, RerunsAreByteIdentical) {
  const std::string config = R"({
    "experiment": "scalar_suite", "law": "ogd", "horizons": [8, 32],
    "n_rollouts": 4, "trajectory_files": 2, "seed": 5
  })";
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  ASSERT_EQ(cli("run", a, config, "--jobs 1"), 0) << slurp(a / "stderr.txt");
  ASSERT_EQ(cli("run", b, config, "--jobs 3"), 0) << slurp(b / "stderr.txt");
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a / "out")) {
    if (entry.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(b / "out" / entry.path().filename()))
        << entry.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 3u);
}

TEST(Cli, RegretCsvIsRecomputableFromTrajectories) {
  const std::string config = R"({
    "experiment": "scalar_suite", "law": "newton", "horizons": [5, 50, 200],
    "n_rollouts": 4, "trajectory_files": 4, "seed": 11, "noise_bound": 0.3
  })";
  const fs::path dir = scratch("recompute");
  ASSERT_EQ(cli("run", dir, config), 0) << slurp(dir / "stderr.txt");
  const json summary = json::parse(slurp(dir / "out" / "summary.json"));
  const auto regret = read_csv(dir / "out" / "regret.csv");
  std::vector<std::vector<std::vector<std::string>>> trajectories;
  for (const auto& seed : summary["seeds"])
    trajectories.push_back(
        read_csv(dir / "out" / ("trajectory_" + std::to_string(seed.get<std::uint64_t>()) + ".csv")));
  ASSERT_EQ(trajectories.size(), 4u);
  for (std::size_t h = 1; h < regret.size(); ++h) {
    const long T = std::stol(regret[h][0]);
    std::vector<double> control, prediction;
    for (const auto& rows : trajectories) {
      ASSERT_EQ(rows[0], (std::vector<std::string>{"t", "xa_0", "xc_0", "u_0", "prediction_error",
                                                   "estimate_norm"}));
      double c = 0.0, p = 0.0;
      for (long t = 0; t < T; ++t) {
        const auto& row = rows[t + 1];
        const double xa = std::stod(row[1]), xc = std::stod(row[2]), e = std::stod(row[4]);
        c += xa * xa - xc * xc;
        p += 0.5 * e * e;
      }
      control.push_back(c);
      prediction.push_back(p);
    }
    const MeanSE cm = mean_and_se(control), pm = mean_and_se(prediction);
    EXPECT_EQ(std::stod(regret[h][1]), cm.mean);
    EXPECT_EQ(std::stod(regret[h][2]), cm.se);
    EXPECT_EQ(std::stod(regret[h][3]), pm.mean);
    EXPECT_EQ(std::stod(regret[h][4]), pm.se);
  }
}

TEST(Cli, CsvFormat) {
  const fs::path dir = scratch("format");
  ASSERT_EQ(cli("run", dir, R"({"experiment": "scalar_suite", "law": "vg", "horizons": [10, 20],
                                 "n_rollouts": 2, "trajectory_files": 1})"),
            0)
      << slurp(dir / "stderr.txt");
  const std::string text = slurp(dir / "out" / "regret.csv");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header,
            "T,control_regret_mean,control_regret_se,prediction_regret_mean,prediction_regret_se,"
            "bound_thm1,bound_thm2,bound_thm3")
      << "(bounds appear in id order)";
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(std::stod(format_number(M_PI)), M_PI);
}

TEST(Cli, ConfigErrorsExitOne) {
  const fs::path dir = scratch("bad");
  EXPECT_EQ(cli("run", dir, R"({"law": "sgd"})"), 1);
  EXPECT_NE(slurp(dir / "stderr.txt").find("'law'"), std::string::npos);
  EXPECT_EQ(cli("run", dir, R"({"unknown_key": 1})"), 1);
  EXPECT_EQ(cli("run", dir, "{not json"), 1);
  EXPECT_EQ(cli("run", dir, "{}", "--seeds 0"), 1);
  EXPECT_EQ(cli("verify", dir, R"({"experiment": "limit_cycle", "law": "vg"})"), 1);
  EXPECT_EQ(cli("run", dir, R"({"experiment": "limit_cycle", "delay": 2, "features": 10})"), 1);
}

TEST(Cli, WrongRateFailsVerificationWithWitness) {
  const fs::path dir = scratch("wrong_rate");
  ASSERT_EQ(cli("verify", dir, R"({"experiment": "scalar_suite", "lyapunov_rate": 0.8,
                                    "lhs_samples": 256})"),
            2);
  const json v = json::parse(slurp(dir / "out" / "verify.json"));
  EXPECT_FALSE(v["pass"].get<bool>());
  bool found = false;
  for (const auto& check : v["checks"]) {
    if (check["name"] != "lyapunov_decrease") continue;
    found = true;
    EXPECT_FALSE(check["pass"].get<bool>());
    EXPECT_GT(check["worst_margin"].get<double>(), 0.0);
    EXPECT_NE(check["witness_state"][0].get<double>(), 0.0);
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(cli("verify", dir, R"({"experiment": "scalar_suite", "lhs_samples": 256})"), 0)
      << slurp(dir / "stderr.txt");
}

TEST(Cli, LimitCycleVerifyReportsRate) {
  const fs::path dir = scratch("limit_cycle");
  ASSERT_EQ(cli("verify", dir, R"({"experiment": "limit_cycle", "features": 20,
                                    "noise_kind": "zero", "lhs_samples": 0})"),
            0)
      << slurp(dir / "stderr.txt");
  const json v = json::parse(slurp(dir / "out" / "verify.json"));
  bool found = false;
  for (const auto& check : v["checks"]) {
    if (check["name"] != "contraction") continue;
    found = true;
    EXPECT_TRUE(check["pass"].get<bool>());
    EXPECT_LT(check["minimal_rate"].get<double>(), 1.0);
  }
  EXPECT_TRUE(found);
}

TEST(Cli, CartpoleBudgetsWithUnitConstants) {
  const fs::path dir = scratch("cartpole_budget");
  const int code = cli("verify", dir, R"({
    "experiment": "cartpole", "features": 20, "lhs_samples": 64,
    "zoh_Lf": 1, "zoh_Lpi": 1, "zoh_LQ": 1, "zoh_rho": 1, "zoh_mu": 1,
    "zoh_lambda": 1, "zoh_L": 1, "zoh_LM": 1, "zoh_D": 1
  })");
  EXPECT_TRUE(code == 0 || code == 2) << slurp(dir / "stderr.txt");
  const json v = json::parse(slurp(dir / "out" / "verify.json"));
  int seen = 0;
  for (const auto& check : v["checks"]) {
    if (check["name"] == "zoh_budget_lyapunov") {
      EXPECT_EQ(check["tau"].get<double>(), tau_budget_lyapunov(1, 1, 1, 1, 1).tau);
      EXPECT_DOUBLE_EQ(check["tau"].get<double>(), 1.0 / 895.0);
      ++seen;
    }
    if (check["name"] == "zoh_budget_contraction") {
      EXPECT_DOUBLE_EQ(check["tau"].get<double>(), 1.0 / 1463.0);
      ++seen;
    }
  }
  EXPECT_EQ(seen, 2);
}

TEST(Runner, ResolvesScalarSuite) {
  ExperimentConfig c;
  c.law = "vg";
  const ResolvedExperiment ex = resolve_experiment(c);
  EXPECT_EQ(ex.model.state_dim, 1);
  ASSERT_TRUE(ex.lyapunov.has_value());
  EXPECT_EQ(ex.lyapunov->decrease_rate, 0.75);
  ASSERT_TRUE(ex.iss.has_value());
  EXPECT_DOUBLE_EQ(ex.iss->rho, 0.5);
}

TEST(Runner, CustomLinearModel) {
  ExperimentConfig c;
  c.experiment = "custom";
  c.custom_A = {{0.5, 0.0}, {0.0, 0.25}};
  c.custom_B = {{1.0}, {0.0}};
  c.custom_Y = {{1.0, 0.0}};
  c.custom_alpha = {0.5, 0.0};
  c.x0 = std::vector<double>{1.0, 1.0};
  const ResolvedExperiment ex = resolve_experiment(c);
  EXPECT_EQ(ex.model.param_dim, 2);
  const Vector x = ex.model.nominal(Vector::Ones(2), 0);
  EXPECT_DOUBLE_EQ(x(0), 0.5);
  EXPECT_DOUBLE_EQ(x(1), 0.25);
  ASSERT_TRUE(ex.iss.has_value());
}

}  // namespace
}  // namespace adaptreg
