#include "adaptreg/config.hpp"

#include <gtest/gtest.h>

#include <string>

namespace adaptreg {
namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, EmptyObjectGivesDefaults) {
  EXPECT_EQ(parse_config("{}"), ExperimentConfig{});
}

TEST(Config, RoundTripsDefaults) {
  const ExperimentConfig c;
  EXPECT_EQ(parse_config(dump_config(c)), c);
}

TEST(Config, RoundTripsEveryField) {
  ExperimentConfig c;
  c.experiment = "custom";
  c.law = "newton";
  c.horizons = {3, 30, 300};
  c.n_rollouts = 5;
  c.delay = 2;
  c.noise_kind = "scaled_gaussian";
  c.noise_bound = 0.3;
  c.noise_sigma = 0.2;
  c.noise_tau = 0.05;
  c.seed = 18446744073709551615ULL;
  c.initial_estimate = "truth";
  c.radius = 2.5;
  c.regularizer = 0.1;
  c.op_norm_bound = 1.5;
  c.newton_step = 2.0;
  c.gradient_bound = 7.0;
  c.features = 12;
  c.alpha_norm = 0.1 + 0.2;
  c.x0 = std::vector<double>{1.0, -2.0};
  c.state_independent_basis = true;
  c.custom_A = {{0.5, 0.1}, {0.0, 0.25}};
  c.custom_B = {{1.0}, {0.0}};
  c.custom_Y = {{1.0, 2.0, 3.0}};
  c.custom_alpha = {0.1, 0.2, 0.3};
  c.lyapunov_rate = 0.4;
  c.zoh_D = 3.0;
  c.gamma_split = 0.25;
  c.output_dir = "results/x";
  c.jobs = 3;
  const ExperimentConfig back = parse_config(dump_config(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(dump_config(back), dump_config(c));
}

TEST(Config, DumpListsEveryKey) {
  const std::string text = dump_config(ExperimentConfig{});
  for (const std::string& key : config_keys())
    EXPECT_NE(text.find("\"" + key + "\""), std::string::npos) << key;
}

TEST(Config, RejectsUnknownKey) {
  EXPECT_NE(error_of(R"({"horizon": [10]})").find("'horizon'"), std::string::npos);
}

TEST(Config, RejectsNonIntegralCounts) {
  EXPECT_NE(error_of(R"({"n_rollouts": 2.5})").find("'n_rollouts'"), std::string::npos);
  EXPECT_NE(error_of(R"({"features": 1.5})").find("'features'"), std::string::npos);
  EXPECT_NE(error_of(R"({"horizons": [10, 20.5]})").find("'horizons'"), std::string::npos);
}

TEST(Config, RejectsWrongTypes) {
  EXPECT_NE(error_of(R"({"law": 3})").find("'law'"), std::string::npos);
  EXPECT_NE(error_of(R"({"radius": "big"})").find("'radius'"), std::string::npos);
}

TEST(Config, ValidationNamesTheKey) {
  EXPECT_NE(error_of(R"({"law": "sgd"})").find("'law'"), std::string::npos);
  EXPECT_NE(error_of(R"({"horizons": [20, 10]})").find("'horizons'"), std::string::npos);
  EXPECT_NE(error_of(R"({"newton_step": 0.5})").find("'newton_step'"), std::string::npos);
  EXPECT_NE(error_of(R"({"gamma_split": 1})").find("'gamma_split'"), std::string::npos);
  EXPECT_NE(error_of(R"({"experiment": "limit_cycle", "law": "vg"})").find("'law'"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"experiment": "custom", "custom_A": [[1, 0]]})").find("'custom_A'"),
            std::string::npos);
}

TEST(Config, RejectsMalformedDocuments) {
  EXPECT_FALSE(error_of("[1, 2]").empty());
  EXPECT_FALSE(error_of("{\"law\": ").empty());
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigurationError);
}

TEST(Config, NullClearsOptional) {
  EXPECT_FALSE(parse_config(R"({"radius": null})").radius.has_value());
  EXPECT_EQ(*parse_config(R"({"features": 7})").features, 7);
}

}  // namespace
}  // namespace adaptreg
