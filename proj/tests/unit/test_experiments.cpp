#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"

using namespace fadin;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec(Scenario s) {
  ExperimentSpec spec;
  spec.scenario = s;
  spec.truths = {uniform_model({0.5}, KernelSpec::truncated_gaussian(0.6, 0.5, 0.3, 1.0))};
  spec.horizons = {200.0, 800.0};
  spec.deltas = {0.1, 0.05};
  spec.repetitions = 3;
  spec.seed = 5;
  spec.fit.max_iter = 100;
  return spec;
}

}  // namespace

TEST(Stats, QuantilesAndLinearFit) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25), 2.0);
  EXPECT_TRUE(std::isnan(median({})));
  const auto [a, b] = linear_fit({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0});
  EXPECT_NEAR(a, 1.0, 1e-14);
  EXPECT_NEAR(b, 2.0, 1e-14);
}

TEST(Experiments, ConsistencyIsDeterministicAndComplete) {
  const auto spec = small_spec(Scenario::ConsistencySweep);
  const auto a = run_consistency(spec);
  auto threaded = spec;
  threaded.threads = 3;
  const auto b = run_consistency(threaded);
  ASSERT_EQ(a.runs.size(), 2u * 3u * 2u);
  for (std::size_t n = 0; n < a.runs.size(); ++n) {
    EXPECT_EQ(a.runs[n].theta_hat, b.runs[n].theta_hat);
    EXPECT_EQ(a.runs[n].seed, b.runs[n].seed);
    EXPECT_TRUE(std::isfinite(a.runs[n].l2_error));
    EXPECT_EQ(a.runs[n].sq_errors.size(), 4u);
  }
  // Same events across deltas for a given (T, rep).
  EXPECT_EQ(a.runs[0].seed, a.runs[1].seed);
  EXPECT_EQ(a.runs[0].n_events, a.runs[1].n_events);
}

TEST(Experiments, PoissonTruthBaselineErrorShrinks) {
  auto spec = small_spec(Scenario::ConsistencySweep);
  spec.truths = {uniform_model({1.0}, KernelSpec::truncated_exponential(0.0, 2.0, 1.0))};
  spec.horizons = {100.0, 10000.0};
  spec.repetitions = 5;
  spec.fit.optimize_kernels = false;
  spec.fit.init_model = uniform_model({0.5}, KernelSpec::truncated_exponential(0.0, 2.0, 1.0));
  const auto r = run_consistency(spec);
  std::vector<double> small, large;
  for (const auto& rec : r.runs) (rec.horizon < 1000 ? small : large).push_back(rec.l2_error);
  EXPECT_LT(median(large), median(small));
}

TEST(Experiments, Prop2ReferenceRowIsZero) {
  auto spec = small_spec(Scenario::Prop2Rate);
  spec.horizons = {200.0};
  spec.deltas = {0.1, 0.05, 0.02};
  spec.delta_ref = 0.01;
  spec.repetitions = 2;
  const auto r = run_prop2_rate(spec);
  ASSERT_EQ(r.runs.size(), 2u * 4u);
  ASSERT_EQ(r.slopes.size(), 2u);
  EXPECT_EQ(r.runs[3].delta, 0.01);
  EXPECT_EQ(r.runs[3].l2_error, 0.0);
  EXPECT_TRUE(std::isfinite(r.slopes[0].slope));
  spec.delta_ref = 0.5;
  EXPECT_THROW((void)run_prop2_rate(spec), ConfigError);
}

TEST(Experiments, WSensitivityAndL2vsLLShapes) {
  auto spec = small_spec(Scenario::WSensitivity);
  spec.truths = {uniform_model({1.1}, KernelSpec::truncated_exponential(0.5, 0.5, 20.0))};
  spec.horizons = {500.0};
  spec.deltas = {0.1};
  spec.supports = {1.0, 5.0};
  spec.repetitions = 1;
  const auto w = run_w_sensitivity(spec);
  ASSERT_EQ(w.runs.size(), 2u);
  EXPECT_EQ(w.runs[1].support, 5.0);
  EXPECT_GT(w.runs[0].budget_seconds, 0.0);

  auto ll = small_spec(Scenario::L2vsLL);
  ll.truths = default_l2_vs_ll_truths();
  ll.horizons = {200.0};
  ll.deltas = {0.05};
  ll.repetitions = 1;
  ll.intensity_error_max_grid = 1000000;
  const auto r = run_l2_vs_ll(ll);
  ASSERT_EQ(r.runs.size(), 3u * 2u);
  EXPECT_EQ(r.runs[0].method, "l2");
  EXPECT_EQ(r.runs[1].method, "log_likelihood");
  EXPECT_EQ(r.runs[0].seed, r.runs[1].seed);
  EXPECT_TRUE(std::isfinite(r.runs[1].intensity_l1));
}

TEST(Experiments, CsvIsAppendOnlyWithSchemaGuard) {
  const auto dir = fs::temp_directory_path() / "fadin_test_csv";
  fs::remove_all(dir);
  auto spec = small_spec(Scenario::ConsistencySweep);
  spec.horizons = {100.0};
  spec.deltas = {0.1};
  spec.repetitions = 2;
  const auto r = run_consistency(spec);
  write_results(dir, r, spec.scenario);
  write_results(dir, r, spec.scenario);
  std::ifstream in(dir / "consistency.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("schema_version,", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind("1,consistency,", 0), 0u);
    ++rows;
  }
  EXPECT_EQ(rows, 4);
  {
    std::ofstream out(dir / "prop2_rate.csv");
    out << "something,else\n";
  }
  EXPECT_THROW(write_results(dir, r, Scenario::Prop2Rate), ConfigError);
}

TEST(Experiments, SpecJson) {
  const auto spec = spec_from_json(io::json::parse(R"({
    "scenario": "l2_vs_ll", "T": [100], "delta": [0.1], "repetitions": 2, "seed": 4,
    "fit": {"max_iter": 30, "optimizer": "adaptive_rms", "step_size": 0.01}})"));
  EXPECT_EQ(spec.truths.size(), 3u);
  EXPECT_EQ(spec.fit.max_iter, 30u);
  const auto again = spec_from_json(spec_to_json(spec));
  EXPECT_EQ(again.truths, spec.truths);
  EXPECT_THROW((void)spec_from_json(io::json::parse(R"({"scenario": "consistency", "T": []})")), ConfigError);
  EXPECT_THROW((void)spec_from_json(io::json::parse(R"({"scenario": "nope", "T": [1], "delta": [0.1]})")),
               ConfigError);
}
