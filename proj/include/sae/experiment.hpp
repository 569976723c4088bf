#pragma once

// Experiment orchestration behind the command-line tool: run configuration,
// multi-seed execution, result serialization and the ablation matrix.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sae/acquisition.hpp"
#include "sae/datapool.hpp"
#include "sae/metrics.hpp"

namespace sae {

using nlohmann::json;

struct RunConfig {
  std::string pool_path;
  std::string test_path;
  Strategy strategy;
  LossVariant loss_variant = LossVariant::dual;
  RegressionForm regression_form = RegressionForm::inverse;
  double rho = 0.2;
  int rounds = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double tau = 0.01;
  double tau_f = 0.01;
  double beta = 0.5;
  double epsilon = 1e-3;
  std::size_t n_seed_per_class = 0;
  BudgetBasis budget_basis = BudgetBasis::initial;
  ProbeConfig probe;
  SehConfig seh;  // widths, dropout, optimizer; loss fields mirror the top level
  std::string output_dir = "out";

  ActiveLearningConfig to_al_config() const {
    ActiveLearningConfig c;
    c.plan.rounds = rounds;
    c.plan.rho = rho;
    c.plan.basis = budget_basis;
    c.strategy = strategy;
    c.seh = seh;
    c.seh.loss_variant = loss_variant;
    c.seh.regression_form = regression_form;
    c.seh.beta = beta;
    c.seh.epsilon = epsilon;
    c.seh.tau_f = tau_f;
    c.probe = probe;
    c.tau = tau;
    c.n_seed_per_class = n_seed_per_class;
    return c;
  }

  // Structural checks that do not touch the filesystem.
  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!(rho > 0.0 && rho <= 1.0)) fail("rho must be in (0, 1]");
    if (rounds < 1) fail("rounds must be >= 1");
    if (seeds.empty()) fail("seeds must be non-empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      fail("seeds must be distinct");
    if (!(tau > 0.0)) fail("tau must be > 0");
    if (!(tau_f > 0.0)) fail("tau_f must be > 0");
    if (!(beta >= 0.0)) fail("beta must be >= 0");
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (probe.batch_size == 0) fail("probe.batch_size must be >= 1");
    if (!(probe.learning_rate >= 0.0)) fail("probe.learning_rate must be >= 0");
    if (pool_path.empty()) fail("pool_path is required");
    if (test_path.empty()) fail("test_path is required");
    if (output_dir.empty()) fail("output_dir is required");
    SehConfig s = to_al_config().seh;
    s.d_img = s.k = 1;
    try {
      s.validate();
    } catch (const InvalidArgument& e) {
      fail(std::string("seh: ") + e.what());
    }
  }

  void validate_paths() const {
    if (!std::filesystem::is_directory(pool_path))
      throw ConfigError("pool_path does not exist: " + pool_path);
    if (!std::filesystem::is_directory(test_path))
      throw ConfigError("test_path does not exist: " + test_path);
  }
};

// ---------------------------------------------------------------------------
// Enum <-> string

template <typename E>
E parse_enum(const std::string& field, const std::string& v,
             std::initializer_list<std::pair<const char*, E>> table) {
  for (const auto& [name, val] : table)
    if (v == name) return val;
  std::string allowed;
  for (const auto& [name, val] : table) allowed += std::string(allowed.empty() ? "" : ", ") + name;
  throw ConfigError(field + ": unknown value '" + v + "' (expected one of " + allowed + ")");
}

inline StrategyKind parse_strategy(const std::string& v) {
  return parse_enum<StrategyKind>("strategy", v,
                                  {{"sae", StrategyKind::sae},
                                   {"random", StrategyKind::random},
                                   {"entropy", StrategyKind::entropy},
                                   {"margin", StrategyKind::margin},
                                   {"least_confidence", StrategyKind::least_confidence},
                                   {"coreset", StrategyKind::coreset_kcenter}});
}

inline ScheduleKind parse_schedule(const std::string& v) {
  return parse_enum<ScheduleKind>("schedule", v,
                                  {{"dynamic", ScheduleKind::dynamic},
                                   {"vacuity_only", ScheduleKind::vacuity_only},
                                   {"dissonance_only", ScheduleKind::dissonance_only},
                                   {"static_balanced", ScheduleKind::static_balanced}});
}

inline LossVariant parse_loss_variant(const std::string& v) {
  return parse_enum<LossVariant>("loss_variant", v,
                                 {{"dual", LossVariant::dual},
                                  {"difficulty_only", LossVariant::difficulty_only},
                                  {"entropy_only", LossVariant::entropy_only}});
}

inline RegressionForm parse_regression_form(const std::string& v) {
  return parse_enum<RegressionForm>(
      "regression_form", v, {{"inverse", RegressionForm::inverse}, {"log", RegressionForm::log}});
}

inline BudgetBasis parse_budget_basis(const std::string& v) {
  return parse_enum<BudgetBasis>("budget_basis", v,
                                 {{"initial", BudgetBasis::initial},
                                  {"current", BudgetBasis::current}});
}

// ---------------------------------------------------------------------------
// Config JSON

namespace detail {

template <typename T>
void read_field(const json& obj, const std::string& key, T& out, const std::string& ctx) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(ctx + key + ": " + e.what());
  }
}

inline void reject_unknown(const json& obj, const std::set<std::string>& known,
                           const std::string& ctx) {
  if (!obj.is_object()) throw ConfigError(ctx + ": expected a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!known.contains(key)) throw ConfigError("unknown config field '" + ctx + key + "'");
}

}  // namespace detail

inline RunConfig run_config_from_json(const json& j) {
  static const std::set<std::string> top = {
      "pool_path", "test_path",      "strategy", "schedule", "loss_variant",
      "regression_form", "rho",      "rounds",   "seeds",    "tau",
      "tau_f",     "beta",           "epsilon",  "n_seed_per_class",
      "budget_basis", "probe",       "seh",      "output_dir"};
  static const std::set<std::string> probe_keys = {"learning_rate", "epochs", "batch_size"};
  static const std::set<std::string> seh_keys = {"h1",           "h2",     "h_s",
                                                 "dropout_rate", "learning_rate", "epochs",
                                                 "batch_size",   "bn_momentum", "grad_clip"};
  detail::reject_unknown(j, top, "");
  RunConfig c;
  std::string strategy = to_string(c.strategy.kind), schedule = to_string(c.strategy.schedule),
              loss = to_string(c.loss_variant), form = to_string(c.regression_form),
              basis = "initial";
  detail::read_field(j, "pool_path", c.pool_path, "");
  detail::read_field(j, "test_path", c.test_path, "");
  detail::read_field(j, "strategy", strategy, "");
  detail::read_field(j, "schedule", schedule, "");
  detail::read_field(j, "loss_variant", loss, "");
  detail::read_field(j, "regression_form", form, "");
  detail::read_field(j, "rho", c.rho, "");
  detail::read_field(j, "rounds", c.rounds, "");
  detail::read_field(j, "seeds", c.seeds, "");
  detail::read_field(j, "tau", c.tau, "");
  detail::read_field(j, "tau_f", c.tau_f, "");
  detail::read_field(j, "beta", c.beta, "");
  detail::read_field(j, "epsilon", c.epsilon, "");
  detail::read_field(j, "n_seed_per_class", c.n_seed_per_class, "");
  detail::read_field(j, "budget_basis", basis, "");
  detail::read_field(j, "output_dir", c.output_dir, "");
  if (j.contains("probe")) {
    const auto& p = j.at("probe");
    detail::reject_unknown(p, probe_keys, "probe.");
    detail::read_field(p, "learning_rate", c.probe.learning_rate, "probe.");
    detail::read_field(p, "epochs", c.probe.epochs, "probe.");
    detail::read_field(p, "batch_size", c.probe.batch_size, "probe.");
  }
  if (j.contains("seh")) {
    const auto& s = j.at("seh");
    detail::reject_unknown(s, seh_keys, "seh.");
    detail::read_field(s, "h1", c.seh.h1, "seh.");
    detail::read_field(s, "h2", c.seh.h2, "seh.");
    detail::read_field(s, "h_s", c.seh.h_s, "seh.");
    detail::read_field(s, "dropout_rate", c.seh.dropout_rate, "seh.");
    detail::read_field(s, "learning_rate", c.seh.learning_rate, "seh.");
    detail::read_field(s, "epochs", c.seh.epochs, "seh.");
    detail::read_field(s, "batch_size", c.seh.batch_size, "seh.");
    detail::read_field(s, "bn_momentum", c.seh.bn_momentum, "seh.");
    detail::read_field(s, "grad_clip", c.seh.grad_clip, "seh.");
  }
  c.strategy.kind = parse_strategy(strategy);
  c.strategy.schedule = parse_schedule(schedule);
  c.loss_variant = parse_loss_variant(loss);
  c.regression_form = parse_regression_form(form);
  c.budget_basis = parse_budget_basis(basis);
  return c;
}

inline json run_config_to_json(const RunConfig& c) {
  return {{"pool_path", c.pool_path},
          {"test_path", c.test_path},
          {"strategy", to_string(c.strategy.kind)},
          {"schedule", to_string(c.strategy.schedule)},
          {"loss_variant", to_string(c.loss_variant)},
          {"regression_form", to_string(c.regression_form)},
          {"rho", c.rho},
          {"rounds", c.rounds},
          {"seeds", c.seeds},
          {"tau", c.tau},
          {"tau_f", c.tau_f},
          {"beta", c.beta},
          {"epsilon", c.epsilon},
          {"n_seed_per_class", c.n_seed_per_class},
          {"budget_basis", c.budget_basis == BudgetBasis::initial ? "initial" : "current"},
          {"probe",
           {{"learning_rate", c.probe.learning_rate},
            {"epochs", c.probe.epochs},
            {"batch_size", c.probe.batch_size}}},
          {"seh",
           {{"h1", c.seh.h1},
            {"h2", c.seh.h2},
            {"h_s", c.seh.h_s},
            {"dropout_rate", c.seh.dropout_rate},
            {"learning_rate", c.seh.learning_rate},
            {"epochs", c.seh.epochs},
            {"batch_size", c.seh.batch_size},
            {"bn_momentum", c.seh.bn_momentum},
            {"grad_clip", c.seh.grad_clip}}},
          {"output_dir", c.output_dir}};
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Results

struct RoundAggregate {
  int round = 0;
  double n_labeled_mean = 0.0;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double nll_mean = 0.0, nll_std = 0.0;
  double ece_mean = 0.0, ece_std = 0.0;
};

struct ExperimentResult {
  RunConfig config;
  std::vector<SeedResult> seeds;
  std::vector<RoundAggregate> aggregate;
  CalibrationReport final_calibration;  // pooled final-round predictions over seeds
};

// Mean and sample standard deviation (0 for a single value).
inline std::pair<double, double> mean_std(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline std::vector<RoundAggregate> aggregate_rounds(const std::vector<SeedResult>& seeds) {
  std::vector<RoundAggregate> out;
  if (seeds.empty()) return out;
  std::size_t common = seeds.front().trajectory.rounds.size();
  for (const auto& s : seeds) common = std::min(common, s.trajectory.rounds.size());
  for (std::size_t r = 0; r < common; ++r) {
    std::vector<double> acc, nl, ec, nlab;
    for (const auto& s : seeds) {
      const auto& rec = s.trajectory.rounds[r];
      acc.push_back(rec.accuracy);
      nl.push_back(rec.nll);
      ec.push_back(rec.ece);
      nlab.push_back(static_cast<double>(rec.n_labeled));
    }
    RoundAggregate a;
    a.round = seeds.front().trajectory.rounds[r].round;
    a.n_labeled_mean = mean_std(nlab).first;
    std::tie(a.accuracy_mean, a.accuracy_std) = mean_std(acc);
    std::tie(a.nll_mean, a.nll_std) = mean_std(nl);
    std::tie(a.ece_mean, a.ece_std) = mean_std(ec);
    out.push_back(a);
  }
  return out;
}

// Concatenates every seed's final-round predictions (seed order) and reports.
inline CalibrationReport pooled_calibration(const std::vector<const Matrix*>& probs,
                                            const std::vector<const std::vector<int>*>& labels) {
  std::size_t rows = 0, cols = 0;
  for (const auto* p : probs) {
    rows += p->rows();
    cols = p->cols();
  }
  if (rows == 0) throw InvalidState("no final-round predictions to calibrate");
  Matrix all(rows, cols);
  std::vector<int> ys;
  std::size_t at = 0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    for (std::size_t i = 0; i < probs[s]->rows(); ++i, ++at)
      std::copy(probs[s]->row(i).begin(), probs[s]->row(i).end(), all.row(at).begin());
    ys.insert(ys.end(), labels[s]->begin(), labels[s]->end());
  }
  return calibration_report(all, ys);
}

inline ExperimentResult run_experiment(const RunConfig& cfg, const EmbeddingPool& pool,
                                       const EmbeddingPool& test) {
  ExperimentResult res;
  res.config = cfg;
  const auto al = cfg.to_al_config();
  for (auto seed : cfg.seeds) res.seeds.push_back(run_active_learning(pool, test, al, seed));
  res.aggregate = aggregate_rounds(res.seeds);
  std::vector<const Matrix*> ps;
  std::vector<const std::vector<int>*> ls;
  for (const auto& s : res.seeds) {
    ps.push_back(&s.final_probs);
    ls.push_back(&s.test_labels);
  }
  res.final_calibration = pooled_calibration(ps, ls);
  return res;
}

// ---------------------------------------------------------------------------
// Serialization

inline json calibration_to_json(const CalibrationReport& r) {
  json bins = json::array();
  for (const auto& b : r.bins)
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"count", b.count},
                    {"mean_conf", b.mean_confidence},
                    {"accuracy", b.accuracy}});
  return {{"nll", r.nll}, {"ece", r.ece}, {"n_samples", r.n_samples}, {"bins", bins}};
}

inline json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json result_to_json(const ExperimentResult& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    json rounds = json::array();
    for (std::size_t i = 0; i < s.trajectory.rounds.size(); ++i) {
      const auto& rec = s.trajectory.rounds[i];
      const auto& dg = s.diagnostics[i];
      rounds.push_back({{"round", rec.round},
                        {"n_labeled", rec.n_labeled},
                        {"accuracy", rec.accuracy},
                        {"nll", rec.nll},
                        {"ece", rec.ece},
                        {"probe_nll", dg.probe.nll},
                        {"probe_ece", dg.probe.ece},
                        {"seh_final_epoch_loss",
                         dg.seh_epoch_loss.empty() ? json(nullptr) : json(dg.seh_epoch_loss.back())},
                        {"wall_clock_seconds", dg.seconds}});
    }
    json sel = json::array();
    for (const auto& e : s.selection_log)
      sel.push_back({{"round", e.round},
                     {"index", e.index},
                     {"score", e.score},
                     {"vacuity", optional_number(e.vacuity)},
                     {"dissonance", optional_number(e.dissonance)},
                     {"w_v", optional_number(e.w_v)},
                     {"w_d", optional_number(e.w_d)}});
    json probs = json::array();
    for (std::size_t i = 0; i < s.final_probs.rows(); ++i)
      probs.push_back(std::vector<double>(s.final_probs.row(i).begin(), s.final_probs.row(i).end()));
    json eff = nullptr;
    try {
      eff = round_efficiency(s.trajectory);
    } catch (const InvalidState&) {
    }
    seeds.push_back({{"seed", s.seed},
                     {"rounds", rounds},
                     {"selections", sel},
                     {"early_stop", s.early_stop},
                     {"final_labeled", s.final_labeled},
                     {"efficiency_ratio", eff},
                     {"final_predictions", {{"probs", probs}, {"labels", s.test_labels}}}});
  }
  json agg = json::array();
  for (const auto& a : r.aggregate)
    agg.push_back({{"round", a.round},
                   {"n_labeled_mean", a.n_labeled_mean},
                   {"accuracy_mean", a.accuracy_mean},
                   {"accuracy_std", a.accuracy_std},
                   {"nll_mean", a.nll_mean},
                   {"nll_std", a.nll_std},
                   {"ece_mean", a.ece_mean},
                   {"ece_std", a.ece_std}});
  return {{"config", run_config_to_json(r.config)},
          {"calibration_head", r.config.strategy.uses_evidence() ? "evidential" : "probe"},
          {"seeds", seeds},
          {"aggregate", agg},
          {"final_calibration", calibration_to_json(r.final_calibration)}};
}

inline std::string opt_csv(const std::optional<double>& v) {
  return v ? format_fixed6(*v) : std::string();
}

inline std::string rounds_csv(const ExperimentResult& r) {
  std::string out = "seed,round,n_labeled,accuracy,nll,ece\n";
  for (const auto& s : r.seeds)
    for (const auto& rec : s.trajectory.rounds)
      out += std::to_string(s.seed) + ',' + std::to_string(rec.round) + ',' +
             std::to_string(rec.n_labeled) + ',' + format_fixed6(rec.accuracy) + ',' +
             format_fixed6(rec.nll) + ',' + format_fixed6(rec.ece) + '\n';
  return out;
}

inline std::string selections_csv(const ExperimentResult& r) {
  std::string out = "seed,round,index,score,vacuity,dissonance,w_v,w_d\n";
  for (const auto& s : r.seeds)
    for (const auto& e : s.selection_log)
      out += std::to_string(s.seed) + ',' + std::to_string(e.round) + ',' +
             std::to_string(e.index) + ',' + format_fixed6(e.score) + ',' + opt_csv(e.vacuity) +
             ',' + opt_csv(e.dissonance) + ',' + opt_csv(e.w_v) + ',' + opt_csv(e.w_d) + '\n';
  return out;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  detail::write_file_atomic(path, std::span(text.data(), text.size()));
}

inline void write_experiment(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create output directory: " + ec.message());
  write_text_atomic(dir / "result.json", result_to_json(r).dump(2) + "\n");
  write_text_atomic(dir / "rounds.csv", rounds_csv(r));
  write_text_atomic(dir / "selections.csv", selections_csv(r));
  write_text_atomic(dir / "reliability.csv", reliability_csv(r.final_calibration));
  const auto ckpt_dir = dir / "checkpoints";
  std::filesystem::create_directories(ckpt_dir, ec);
  if (ec) throw IoError(ckpt_dir.string(), "cannot create directory: " + ec.message());
  for (const auto& s : r.seeds) {
    const std::string stem = "seed" + std::to_string(s.seed);
    save_probe(s.final_probe, (ckpt_dir / (stem + "_probe.bin")).string());
    if (s.final_seh) save_seh(*s.final_seh, (ckpt_dir / (stem + "_seh.bin")).string());
  }
}

// Recomputes the pooled calibration report from a result.json document.
inline CalibrationReport calibration_from_result(const json& result) {
  if (!result.contains("seeds") || !result.at("seeds").is_array() || result.at("seeds").empty())
    throw InvalidState("result has no per-seed data");
  std::vector<Matrix> probs;
  std::vector<std::vector<int>> labels;
  for (const auto& s : result.at("seeds")) {
    if (!s.contains("final_predictions"))
      throw InvalidState("result is missing final_predictions for a seed");
    const auto& fp = s.at("final_predictions");
    const auto rows = fp.at("probs").get<std::vector<std::vector<double>>>();
    auto ys = fp.at("labels").get<std::vector<int>>();
    if (rows.empty() || rows.size() != ys.size())
      throw InvalidState("final_predictions are empty or inconsistent");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols()) throw InvalidState("ragged prediction rows");
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    probs.push_back(std::move(m));
    labels.push_back(std::move(ys));
  }
  std::vector<const Matrix*> ps;
  std::vector<const std::vector<int>*> ls;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    ps.push_back(&probs[i]);
    ls.push_back(&labels[i]);
  }
  return pooled_calibration(ps, ls);
}

// ---------------------------------------------------------------------------
// Ablations

struct AblationRow {
  std::string variant;
  double acc_mean = 0.0, acc_std = 0.0;
  double nll_mean = 0.0, nll_std = 0.0;
  double ece_mean = 0.0, ece_std = 0.0;
};

inline const std::vector<std::string>& ablation_axes() {
  static const std::vector<std::string> axes = {"loss_variant", "regression_form", "beta",
                                                "epsilon", "schedule"};
  return axes;
}

inline std::vector<std::string> default_ablation_values(const std::string& axis) {
  if (axis == "loss_variant") return {"entropy_only", "difficulty_only", "dual"};
  if (axis == "regression_form") return {"log", "inverse"};
  if (axis == "beta") return {"0.1", "0.3", "0.5", "0.7", "1.0"};
  if (axis == "epsilon") return {"0.0001", "0.0005", "0.001", "0.005", "0.01"};
  if (axis == "schedule") return {"dynamic", "vacuity_only", "dissonance_only", "static_balanced"};
  throw ConfigError("unknown ablation axis '" + axis +
                    "' (expected loss_variant, regression_form, beta, epsilon or schedule)");
}

inline double parse_number(const std::string& field, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError(field + ": '" + v + "' is not a number");
  return x;
}

inline RunConfig apply_ablation(RunConfig cfg, const std::string& axis, const std::string& value) {
  cfg.strategy.kind = StrategyKind::sae;
  if (axis == "loss_variant") cfg.loss_variant = parse_loss_variant(value);
  else if (axis == "regression_form") cfg.regression_form = parse_regression_form(value);
  else if (axis == "beta") cfg.beta = parse_number("beta", value);
  else if (axis == "epsilon") cfg.epsilon = parse_number("epsilon", value);
  else if (axis == "schedule") cfg.strategy.schedule = parse_schedule(value);
  else default_ablation_values(axis);  // throws for unknown axes
  cfg.validate();
  return cfg;
}

inline AblationRow summarize_final(const std::string& variant, const ExperimentResult& r) {
  std::vector<double> acc, nl, ec;
  for (const auto& s : r.seeds) {
    if (s.trajectory.rounds.empty()) continue;
    acc.push_back(s.trajectory.rounds.back().accuracy);
    nl.push_back(s.trajectory.rounds.back().nll);
    ec.push_back(s.trajectory.rounds.back().ece);
  }
  AblationRow row;
  row.variant = variant;
  std::tie(row.acc_mean, row.acc_std) = mean_std(acc);
  std::tie(row.nll_mean, row.nll_std) = mean_std(nl);
  std::tie(row.ece_mean, row.ece_std) = mean_std(ec);
  return row;
}

inline std::string ablation_csv(const std::string& axis, const std::vector<AblationRow>& rows) {
  std::string out = "axis,variant,acc_mean,acc_std,nll_mean,nll_std,ece_mean,ece_std\n";
  for (const auto& r : rows)
    out += axis + ',' + r.variant + ',' + format_fixed6(r.acc_mean) + ',' +
           format_fixed6(r.acc_std) + ',' + format_fixed6(r.nll_mean) + ',' +
           format_fixed6(r.nll_std) + ',' + format_fixed6(r.ece_mean) + ',' +
           format_fixed6(r.ece_std) + '\n';
  return out;
}

}  // namespace sae
