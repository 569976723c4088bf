// Command-line front end: gen, run, ablate, calib, score.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sae/sae.hpp"

namespace fs = std::filesystem;
using namespace sae;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kRuntime = 4 };

std::vector<std::size_t> parse_counts(const std::string& flag, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = parse_number(flag, item);
    if (v < 1.0 || v != std::floor(v)) throw ConfigError(flag + ": counts must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError(flag + ": empty list");
  return out;
}

// Flags that override RunConfig fields (kebab-case of the field names).
struct RunOverrides {
  std::string pool_path, test_path, strategy, schedule, loss_variant, regression_form,
      budget_basis, output_dir, seeds;
  std::optional<double> rho, tau, tau_f, beta, epsilon;
  std::optional<int> rounds;
  std::optional<std::size_t> n_seed_per_class;

  void attach(CLI::App* app) {
    app->add_option("--pool-path", pool_path, "Pool directory");
    app->add_option("--test-path", test_path, "Test split directory");
    app->add_option("--strategy", strategy, "sae|random|entropy|margin|least_confidence|coreset");
    app->add_option("--schedule", schedule, "dynamic|vacuity_only|dissonance_only|static_balanced");
    app->add_option("--loss-variant", loss_variant, "dual|difficulty_only|entropy_only");
    app->add_option("--regression-form", regression_form, "inverse|log");
    app->add_option("--budget-basis", budget_basis, "initial|current");
    app->add_option("--output-dir", output_dir, "Output directory");
    app->add_option("--seeds", seeds, "Comma-separated seed list");
    app->add_option("--rho", rho, "Total label budget ratio");
    app->add_option("--rounds", rounds, "Number of rounds");
    app->add_option("--tau", tau, "Similarity softmax temperature");
    app->add_option("--tau-f", tau_f, "Entropy-target temperature");
    app->add_option("--beta", beta, "Entropy term weight");
    app->add_option("--epsilon", epsilon, "Loss stabilizer");
    app->add_option("--n-seed-per-class", n_seed_per_class, "Initial labeled samples per class");
  }

  void apply(RunConfig& c) const {
    if (!pool_path.empty()) c.pool_path = pool_path;
    if (!test_path.empty()) c.test_path = test_path;
    if (!strategy.empty()) c.strategy.kind = parse_strategy(strategy);
    if (!schedule.empty()) c.strategy.schedule = parse_schedule(schedule);
    if (!loss_variant.empty()) c.loss_variant = parse_loss_variant(loss_variant);
    if (!regression_form.empty()) c.regression_form = parse_regression_form(regression_form);
    if (!budget_basis.empty()) c.budget_basis = parse_budget_basis(budget_basis);
    if (!output_dir.empty()) c.output_dir = output_dir;
    if (!seeds.empty()) {
      c.seeds.clear();
      std::stringstream ss(seeds);
      for (std::string item; std::getline(ss, item, ',');) {
        const double v = parse_number("--seeds", item);
        if (v < 0.0 || v != std::floor(v)) throw ConfigError("--seeds: seeds must be non-negative integers");
        c.seeds.push_back(static_cast<std::uint64_t>(v));
      }
    }
    if (rho) c.rho = *rho;
    if (rounds) c.rounds = *rounds;
    if (tau) c.tau = *tau;
    if (tau_f) c.tau_f = *tau_f;
    if (beta) c.beta = *beta;
    if (epsilon) c.epsilon = *epsilon;
    if (n_seed_per_class) c.n_seed_per_class = *n_seed_per_class;
  }
};

RunConfig resolve_config(const std::string& config_path, const RunOverrides& ov) {
  RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  ov.apply(c);
  c.validate();
  c.validate_paths();
  return c;
}

std::pair<EmbeddingPool, EmbeddingPool> load_pools(const RunConfig& c) {
  auto pool = load_pool(c.pool_path);
  auto test = load_pool(c.test_path);
  if (pool.d != test.d || pool.k != test.k)
    throw LoadError("pool.json", 0, "pool and test split have different d or k");
  return {std::move(pool), std::move(test)};
}

int cmd_gen(const SyntheticPoolConfig& g, const std::string& out, std::string test_out) {
  if (g.k < 2) throw ConfigError("--k must be >= 2");
  if (g.d < 2) throw ConfigError("--d must be >= 2");
  if (test_out.empty()) test_out = fs::path(out).string() + "-test";
  const auto pools = generate_synthetic_pool(g);
  save_pool(pools.pool, out);
  save_pool(pools.test, test_out);
  if (!pools.orthonormal)
    std::cout << "note: k > d, class directions are random; max pairwise cosine "
              << format_fixed6(pools.max_pairwise_cosine) << "\n";
  std::cout << "pool: " << out << " (n=" << pools.pool.n << ")\n"
            << "test: " << test_out << " (n=" << pools.test.n << ")\n"
            << "zero-shot accuracy: pool=" << format_fixed6(zero_shot_accuracy(pools.pool))
            << " test=" << format_fixed6(zero_shot_accuracy(pools.test)) << "\n";
  return kOk;
}

int cmd_run(const RunConfig& c) {
  const auto [pool, test] = load_pools(c);
  const auto res = run_experiment(c, pool, test);
  write_experiment(res, c.output_dir);
  for (const auto& a : res.aggregate)
    std::cout << "round " << a.round << " n_labeled=" << a.n_labeled_mean
              << " acc=" << format_fixed6(a.accuracy_mean) << "+-" << format_fixed6(a.accuracy_std)
              << " nll=" << format_fixed6(a.nll_mean) << " ece=" << format_fixed6(a.ece_mean)
              << "\n";
  std::cout << "wrote " << c.output_dir << "\n";
  return kOk;
}

int cmd_ablate(const RunConfig& base, const std::string& axis, const std::string& values_text) {
  std::vector<std::string> values;
  if (values_text.empty()) {
    values = default_ablation_values(axis);
  } else {
    default_ablation_values(axis);  // validates the axis
    std::stringstream ss(values_text);
    for (std::string v; std::getline(ss, v, ',');) values.push_back(v);
  }
  std::vector<RunConfig> variants;
  for (const auto& v : values) variants.push_back(apply_ablation(base, axis, v));
  const auto [pool, test] = load_pools(base);
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    rows.push_back(summarize_final(values[i], run_experiment(variants[i], pool, test)));
    std::cout << axis << "=" << values[i] << " acc=" << format_fixed6(rows.back().acc_mean) << "+-"
              << format_fixed6(rows.back().acc_std) << "\n";
  }
  std::error_code ec;
  fs::create_directories(base.output_dir, ec);
  if (ec) throw IoError(base.output_dir, "cannot create output directory");
  write_text_atomic(fs::path(base.output_dir) / "ablation.csv", ablation_csv(axis, rows));
  std::cout << "wrote " << (fs::path(base.output_dir) / "ablation.csv").string() << "\n";
  return kOk;
}

int cmd_calib(const std::string& result_path, std::string out) {
  std::ifstream is(result_path);
  if (!is) throw ConfigError("cannot open " + result_path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw LoadError(result_path, 0, std::string("not valid JSON: ") + e.what());
  }
  const auto rep = calibration_from_result(j);
  if (out.empty()) out = (fs::path(result_path).parent_path() / "reliability.csv").string();
  write_text_atomic(out, reliability_csv(rep));
  std::cout << "ECE=" << format_fixed6(rep.ece) << " NLL=" << format_fixed6(rep.nll) << "\n";
  return kOk;
}

int cmd_score(const std::string& pool_path, const std::string& seh_path, double tau,
              const std::string& out) {
  const auto pool = load_pool(pool_path);
  const auto seh = load_seh(seh_path);
  if (seh.d_img() != pool.d || seh.k() != pool.k)
    throw LoadError(seh_path, 0, "checkpoint shape does not match the pool");
  const Vector lam = seh_predict(seh, pool.embeddings, pool.similarities);
  std::string text = "index,lambda,vacuity,dissonance,confidence\n";
  for (std::size_t i = 0; i < pool.n; ++i) {
    const auto u = decompose(evidence_from_similarity(pool.similarities.row(i), lam[i], tau));
    text += std::to_string(i) + ',' + format_fixed6(lam[i]) + ',' + format_fixed6(u.vacuity) + ',' +
            format_fixed6(u.dissonance) + ',' +
            format_fixed6(*std::max_element(u.expected_prob.begin(), u.expected_prob.end())) + '\n';
  }
  if (out.empty()) std::cout << text;
  else write_text_atomic(out, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidential active learning on precomputed embedding pools"};
  app.require_subcommand(1);

  SyntheticPoolConfig gen_cfg;
  std::string gen_out, gen_test_out, gen_counts = "400", gen_test_counts = "100";
  auto* gen = app.add_subcommand("gen", "Generate a synthetic pool and test split");
  gen->add_option("--k", gen_cfg.k, "Number of classes (>= 2)");
  gen->add_option("--d", gen_cfg.d, "Embedding dimension (>= 2)");
  gen->add_option("--n-per-class", gen_counts, "Pool samples per class (one value or k values)");
  gen->add_option("--test-per-class", gen_test_counts, "Test samples per class");
  gen->add_option("--intra-sigma", gen_cfg.intra_sigma, "Per-coordinate sample noise");
  gen->add_option("--proto-noise", gen_cfg.proto_noise, "Per-coordinate prototype noise");
  gen->add_option("--descriptions", gen_cfg.descriptions_per_class, "Descriptions per class");
  gen->add_option("--seed", gen_cfg.seed, "Generator seed");
  gen->add_option("--out", gen_out, "Pool output directory")->required();
  gen->add_option("--test-out", gen_test_out, "Test output directory (default <out>-test)");

  std::string run_config;
  RunOverrides run_ov;
  auto* run = app.add_subcommand("run", "Run an active-learning experiment");
  run->add_option("config", run_config, "Run configuration (JSON)");
  run_ov.attach(run);

  std::string ablate_config, axis, axis_values;
  RunOverrides ablate_ov;
  auto* ablate = app.add_subcommand("ablate", "Run the base configuration once per axis value");
  ablate->add_option("config", ablate_config, "Base run configuration (JSON)");
  ablate->add_option("--axis", axis, "loss_variant|regression_form|beta|epsilon|schedule")
      ->required();
  ablate->add_option("--values", axis_values, "Comma-separated values (default: standard set)");
  ablate_ov.attach(ablate);

  std::string calib_result, calib_out;
  auto* calib = app.add_subcommand("calib", "Recompute calibration from a result.json");
  calib->add_option("result", calib_result, "Path to result.json")->required();
  calib->add_option("--out", calib_out, "Reliability CSV path (default next to result)");

  std::string score_pool, score_seh, score_out;
  double score_tau = 0.01;
  auto* score = app.add_subcommand("score", "Score a pool with a saved evidence-head checkpoint");
  score->add_option("--pool-path", score_pool, "Pool directory")->required();
  score->add_option("--seh", score_seh, "Evidence-head checkpoint")->required();
  score->add_option("--tau", score_tau, "Similarity softmax temperature");
  score->add_option("--out", score_out, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      gen_cfg.n_per_class = parse_counts("--n-per-class", gen_counts);
      gen_cfg.test_per_class = parse_counts("--test-per-class", gen_test_counts);
      return cmd_gen(gen_cfg, gen_out, gen_test_out);
    }
    if (*run) return cmd_run(resolve_config(run_config, run_ov));
    if (*ablate) return cmd_ablate(resolve_config(ablate_config, ablate_ov), axis, axis_values);
    if (*calib) return cmd_calib(calib_result, calib_out);
    if (*score) return cmd_score(score_pool, score_seh, score_tau, score_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const LoadError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kData;
  } catch (const InvalidArgument& e) {
    // Invalid generator settings and similar argument problems from the CLI.
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
