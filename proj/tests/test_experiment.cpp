#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sae/experiment.hpp"

using namespace sae;
namespace fs = std::filesystem;

namespace {

SyntheticPools small_pools() {
  SyntheticPoolConfig c;
  c.k = 4;
  c.d = 12;
  c.n_per_class = {25};
  c.test_per_class = {10};
  c.seed = 11;
  return generate_synthetic_pool(c);
}

RunConfig quick_run(StrategyKind kind) {
  RunConfig c;
  c.pool_path = "unused";
  c.test_path = "unused";
  c.strategy.kind = kind;
  c.seeds = {0, 1, 2};
  c.seh.h1 = 16;
  c.seh.h2 = 8;
  c.seh.h_s = 4;
  c.seh.epochs = 4;
  c.probe.epochs = 15;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(RunConfigJson, DefaultsRoundTrip) {
  RunConfig c;
  c.pool_path = "p";
  c.test_path = "t";
  c.seh.grad_clip = 7.0;
  c.strategy = {StrategyKind::margin, ScheduleKind::static_balanced};
  const RunConfig back = run_config_from_json(run_config_to_json(c));
  EXPECT_EQ(run_config_to_json(back), run_config_to_json(c));
  EXPECT_EQ(back.strategy.kind, StrategyKind::margin);
  EXPECT_EQ(back.seh.grad_clip, 7.0);
}

TEST(RunConfigJson, UnknownFieldsRejected) {
  EXPECT_THROW(run_config_from_json(json{{"rho", 0.2}, {"rhoo", 0.1}}), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"seh", {{"width", 3}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"probe", {{"lr", 3}}}}), ConfigError);
  try {
    run_config_from_json(json{{"seh", {{"width", 3}}}});
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("seh.width"), std::string::npos);
  }
}

TEST(RunConfigJson, BadValuesRejected) {
  EXPECT_THROW(run_config_from_json(json{{"strategy", "bald"}}), ConfigError);
  EXPECT_THROW(run_config_from_json(json{{"rho", "big"}}), ConfigError);
  EXPECT_THROW(run_config_from_json(json::array()), ConfigError);
  RunConfig c = quick_run(StrategyKind::sae);
  c.rho = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = quick_run(StrategyKind::sae);
  c.seeds = {1, 1};
  EXPECT_THROW(c.validate(), ConfigError);
  c = quick_run(StrategyKind::sae);
  c.seh.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = quick_run(StrategyKind::sae);
  c.pool_path.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(quick_run(StrategyKind::sae).validate());
}

TEST(RunConfigJson, TopLevelLossFieldsReachTheHead) {
  RunConfig c;
  c.beta = 0.7;
  c.epsilon = 0.005;
  c.tau_f = 0.1;
  c.loss_variant = LossVariant::entropy_only;
  const auto al = c.to_al_config();
  EXPECT_EQ(al.seh.beta, 0.7);
  EXPECT_EQ(al.seh.epsilon, 0.005);
  EXPECT_EQ(al.seh.tau_f, 0.1);
  EXPECT_EQ(al.seh.loss_variant, LossVariant::entropy_only);
}

TEST(Aggregate, MeanAndSampleStd) {
  const auto [m, s] = mean_std(std::vector<double>{1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(mean_std(std::vector<double>{3.0}).second, 0.0);

  std::vector<SeedResult> seeds(2);
  seeds[0].trajectory.rounds = {{1, 4, 0.5, 1.0, 0.1}, {2, 8, 0.7, 0.8, 0.2}};
  seeds[1].trajectory.rounds = {{1, 4, 0.7, 2.0, 0.3}};
  const auto agg = aggregate_rounds(seeds);
  ASSERT_EQ(agg.size(), 1u);  // truncated to the shortest trajectory
  EXPECT_DOUBLE_EQ(agg[0].accuracy_mean, 0.6);
  EXPECT_NEAR(agg[0].accuracy_std, std::sqrt(0.02), 1e-15);
  EXPECT_DOUBLE_EQ(agg[0].nll_mean, 1.5);
}

TEST(Experiment, CalibrationIsConsistentAcrossOutputs) {
  const auto pools = small_pools();
  for (StrategyKind kind : {StrategyKind::sae, StrategyKind::entropy}) {
    SCOPED_TRACE(to_string(kind));
    const auto r = run_experiment(quick_run(kind), pools.pool, pools.test);
    const auto recomputed = calibration_from_result(result_to_json(r));
    EXPECT_NEAR(recomputed.ece, r.final_calibration.ece, 1e-12);
    EXPECT_NEAR(recomputed.nll, r.final_calibration.nll, 1e-12);
    // Each seed's final reported ECE matches its own stored predictions.
    for (const auto& s : r.seeds) {
      const auto one = calibration_report(s.final_probs, s.test_labels);
      EXPECT_NEAR(one.ece, s.trajectory.rounds.back().ece, 1e-12);
      EXPECT_NEAR(one.nll, s.trajectory.rounds.back().nll, 1e-12);
    }
    EXPECT_EQ(r.final_calibration.n_samples, 3u * pools.test.n);
  }
}

TEST(Experiment, CsvShapes) {
  const auto pools = small_pools();
  const auto sae_r = run_experiment(quick_run(StrategyKind::sae), pools.pool, pools.test);
  const auto rnd_r = run_experiment(quick_run(StrategyKind::random), pools.pool, pools.test);
  const std::string rounds = rounds_csv(sae_r);
  EXPECT_EQ(rounds.rfind("seed,round,n_labeled,accuracy,nll,ece\n", 0), 0u);
  EXPECT_EQ(std::count(rounds.begin(), rounds.end(), '\n'), 1 + 3 * 5);
  EXPECT_NE(rounds.find("\n0,1,4,"), std::string::npos);

  const std::string sel = selections_csv(sae_r);
  EXPECT_EQ(std::count(sel.begin(), sel.end(), '\n'), 1 + 3 * 20);
  EXPECT_NE(sel.find(",1.000000,0.000000\n"), std::string::npos);  // round-1 weights
  const std::string rsel = selections_csv(rnd_r);
  EXPECT_NE(rsel.find(",,,,\n"), std::string::npos);  // no evidential fields
}

TEST(Experiment, WrittenFilesAreReproducible) {
  const auto pools = small_pools();
  const fs::path a = fs::temp_directory_path() / "sae_test_exp_a";
  const fs::path b = fs::temp_directory_path() / "sae_test_exp_b";
  fs::remove_all(a);
  fs::remove_all(b);
  auto cfg = quick_run(StrategyKind::sae);
  write_experiment(run_experiment(cfg, pools.pool, pools.test), a);
  write_experiment(run_experiment(cfg, pools.pool, pools.test), b);
  for (const char* f : {"rounds.csv", "selections.csv", "reliability.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_TRUE(fs::exists(a / "result.json"));
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "seed2_seh.bin"));
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "seed2_probe.bin"));
  const auto doc = json::parse(slurp(a / "result.json"));
  EXPECT_EQ(doc.at("calibration_head"), "evidential");
  EXPECT_EQ(doc.at("seeds").size(), 3u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Ablation, Axes) {
  const RunConfig base = quick_run(StrategyKind::random);
  EXPECT_EQ(apply_ablation(base, "beta", "0.3").beta, 0.3);
  EXPECT_EQ(apply_ablation(base, "beta", "0.3").strategy.kind, StrategyKind::sae);
  EXPECT_EQ(apply_ablation(base, "loss_variant", "difficulty_only").loss_variant,
            LossVariant::difficulty_only);
  EXPECT_EQ(apply_ablation(base, "schedule", "vacuity_only").strategy.schedule,
            ScheduleKind::vacuity_only);
  EXPECT_THROW(apply_ablation(base, "gamma", "1"), ConfigError);
  EXPECT_THROW(apply_ablation(base, "beta", "abc"), ConfigError);
  EXPECT_THROW(apply_ablation(base, "epsilon", "-1"), ConfigError);
  for (const auto& axis : ablation_axes()) EXPECT_FALSE(default_ablation_values(axis).empty());
}

TEST(Ablation, RowsAndCsv) {
  const auto pools = small_pools();
  std::vector<AblationRow> rows;
  for (const auto& v : default_ablation_values("loss_variant")) {
    const RunConfig cfg = apply_ablation(quick_run(StrategyKind::sae), "loss_variant", v);
    rows.push_back(summarize_final(v, run_experiment(cfg, pools.pool, pools.test)));
  }
  const std::string csv = ablation_csv("loss_variant", rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("\nloss_variant,dual,"), std::string::npos);
  for (const auto& r : rows) {
    EXPECT_GE(r.acc_mean, 0.0);
    EXPECT_LE(r.acc_mean, 1.0);
    EXPECT_GE(r.acc_std, 0.0);
  }
}

TEST(Experiment, StoredAggregatesMatchRecomputation) {
  const auto pools = small_pools();
  const json doc = result_to_json(run_experiment(quick_run(StrategyKind::margin), pools.pool,
                                                 pools.test));
  const auto& agg = doc.at("aggregate");
  ASSERT_EQ(agg.size(), 5u);
  for (std::size_t r = 0; r < agg.size(); ++r) {
    std::vector<double> acc, ece;
    for (const auto& s : doc.at("seeds")) {
      acc.push_back(s.at("rounds")[r].at("accuracy").get<double>());
      ece.push_back(s.at("rounds")[r].at("ece").get<double>());
    }
    const auto [am, as] = mean_std(acc);
    EXPECT_NEAR(agg[r].at("accuracy_mean").get<double>(), am, 1e-9);
    EXPECT_NEAR(agg[r].at("accuracy_std").get<double>(), as, 1e-9);
    EXPECT_NEAR(agg[r].at("ece_mean").get<double>(), mean_std(ece).first, 1e-9);
  }
  EXPECT_EQ(doc.at("calibration_head"), "probe");
}

TEST(RunConfigJson, ShippedExampleParses) {
  const RunConfig c = load_run_config(std::string(SAE_SOURCE_DIR) + "/configs/example.json");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(run_config_to_json(c), run_config_to_json(run_config_from_json(run_config_to_json(c))));
  RunConfig defaults;
  defaults.pool_path = c.pool_path;
  defaults.test_path = c.test_path;
  defaults.output_dir = c.output_dir;
  EXPECT_EQ(run_config_to_json(c), run_config_to_json(defaults));  // example spells out defaults
}
