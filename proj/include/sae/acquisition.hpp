#pragma once

// Acquisition scoring, batch selection and the pool-based active-learning
// driver with a simulated (ground-truth lookup) oracle.

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sae/datapool.hpp"
#include "sae/evidence.hpp"
#include "sae/metrics.hpp"
#include "sae/probe.hpp"
#include "sae/seh.hpp"

namespace sae {

enum class ScheduleKind { dynamic, vacuity_only, dissonance_only, static_balanced };

enum class StrategyKind { sae, random, entropy, margin, least_confidence, coreset_kcenter };

struct Strategy {
  StrategyKind kind = StrategyKind::sae;
  ScheduleKind schedule = ScheduleKind::dynamic;

  bool uses_evidence() const { return kind == StrategyKind::sae; }
};

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::dynamic: return "dynamic";
    case ScheduleKind::vacuity_only: return "vacuity_only";
    case ScheduleKind::dissonance_only: return "dissonance_only";
    case ScheduleKind::static_balanced: return "static_balanced";
  }
  return "?";
}

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::sae: return "sae";
    case StrategyKind::random: return "random";
    case StrategyKind::entropy: return "entropy";
    case StrategyKind::margin: return "margin";
    case StrategyKind::least_confidence: return "least_confidence";
    case StrategyKind::coreset_kcenter: return "coreset";
  }
  return "?";
}

enum class BudgetBasis { initial, current };

struct RoundPlan {
  int rounds = 5;
  double rho = 0.2;
  std::size_t initial_pool_size = 0;
  BudgetBasis basis = BudgetBasis::initial;

  double rho_t() const { return rho / static_cast<double>(rounds); }

  void validate() const {
    if (rounds < 1) throw InvalidArgument("RoundPlan: rounds must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("RoundPlan: rho must be in (0, 1]");
  }
};

struct ScheduleWeights {
  double vacuity = 1.0;
  double dissonance = 0.0;
};

inline ScheduleWeights schedule_weights(int t, int total_rounds, ScheduleKind kind) {
  if (total_rounds < 1 || t < 1 || t > total_rounds)
    throw InvalidArgument("schedule_weights: round " + std::to_string(t) + " outside [1, " +
                          std::to_string(total_rounds) + "]");
  switch (kind) {
    case ScheduleKind::vacuity_only: return {1.0, 0.0};
    case ScheduleKind::dissonance_only: return {0.0, 1.0};
    case ScheduleKind::static_balanced: return {0.5, 0.5};
    case ScheduleKind::dynamic: break;
  }
  if (total_rounds == 1) return {1.0, 0.0};
  const double wd = static_cast<double>(t - 1) / static_cast<double>(total_rounds - 1);
  return {1.0 - wd, wd};
}

// Score_i = w_v * g(vac)_i + w_d * g(dis)_i with g = min-max over the pool.
inline Vector dual_factor_scores(std::span<const double> vac, std::span<const double> dis, int t,
                                 int total_rounds, ScheduleKind kind) {
  if (vac.size() != dis.size())
    throw InvalidArgument("dual_factor_scores: vacuity and dissonance lengths differ");
  const auto w = schedule_weights(t, total_rounds, kind);
  const Vector gv = min_max_normalize(vac), gd = min_max_normalize(dis);
  Vector out(vac.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w.vacuity * gv[i] + w.dissonance * gd[i];
  return out;
}

// Probability-based uncertainty scores (higher = more uncertain).
inline Vector uncertainty_scores(StrategyKind kind, const Matrix& probs) {
  Vector out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto p = probs.row(i);
    check_probability_vector(p);
    switch (kind) {
      case StrategyKind::entropy: out[i] = entropy(p); break;
      case StrategyKind::least_confidence:
        out[i] = 1.0 - *std::max_element(p.begin(), p.end());
        break;
      case StrategyKind::margin: {
        double first = -1.0, second = -1.0;
        for (double v : p) {
          if (v > first) {
            second = first;
            first = v;
          } else if (v > second) {
            second = v;
          }
        }
        out[i] = 1.0 - (first - std::max(second, 0.0));
        break;
      }
      default: throw InvalidArgument("uncertainty_scores: not a probability-based strategy");
    }
  }
  return out;
}

// Top-n positions by descending score; ties by ascending position.
inline std::vector<std::size_t> select_batch(std::span<const double> scores, std::size_t n) {
  if (n > scores.size())
    throw InvalidArgument("select_batch: requested " + std::to_string(n) + " of " +
                          std::to_string(scores.size()));
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(n);
  return idx;
}

struct KCenterSelection {
  std::vector<std::size_t> positions;  // into the candidate list
  Vector distances;                    // distance at the time of each pick
};

// Greedy farthest-point selection of n candidates given existing centers.
// With no centers, the first pick is the candidate farthest from the
// candidates' centroid.
inline KCenterSelection kcenter_greedy(const Matrix& embeddings,
                                       std::span<const std::size_t> centers,
                                       std::span<const std::size_t> candidates, std::size_t n) {
  if (n > candidates.size()) throw InvalidArgument("kcenter_greedy: n exceeds candidate count");
  const std::size_t d = embeddings.cols();
  auto dist = [&](std::size_t a, std::span<const double> b) {
    const auto ra = embeddings.row(a);
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = ra[j] - b[j];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  };
  Vector nearest(candidates.size(), std::numeric_limits<double>::infinity());
  for (std::size_t c : centers)
    for (std::size_t i = 0; i < candidates.size(); ++i)
      nearest[i] = std::min(nearest[i], dist(candidates[i], embeddings.row(c)));

  KCenterSelection sel;
  std::vector<char> taken(candidates.size(), 0);
  for (std::size_t pick = 0; pick < n; ++pick) {
    std::size_t best = candidates.size();
    double best_d = -1.0;
    if (centers.empty() && pick == 0) {
      Vector centroid(d, 0.0);
      for (std::size_t c : candidates)
        for (std::size_t j = 0; j < d; ++j) centroid[j] += embeddings(c, j);
      for (double& v : centroid) v /= static_cast<double>(candidates.size());
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double di = dist(candidates[i], centroid);
        if (di > best_d) best_d = di, best = i;
      }
    } else {
      for (std::size_t i = 0; i < candidates.size(); ++i)
        if (!taken[i] && nearest[i] > best_d) best_d = nearest[i], best = i;
    }
    taken[best] = 1;
    sel.positions.push_back(best);
    sel.distances.push_back(best_d);
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (!taken[i])
        nearest[i] = std::min(nearest[i], dist(candidates[i], embeddings.row(candidates[best])));
  }
  return sel;
}

// Per-round query size. Fixed basis: floor(rho_t * initial pool); current
// basis: floor(rho_t * |D_U|). At least one, at most what is left.
inline std::size_t round_budget(const RoundPlan& plan, int t, std::size_t remaining) {
  plan.validate();
  if (t < 1 || t > plan.rounds) throw InvalidArgument("round_budget: round out of range");
  const std::size_t basis =
      plan.basis == BudgetBasis::initial ? plan.initial_pool_size : remaining;
  // The small offset keeps products such as 0.04 * 100 from flooring to 3.
  const auto raw = static_cast<std::size_t>(std::floor(plan.rho_t() * static_cast<double>(basis) + 1e-9));
  return std::min(remaining, std::max<std::size_t>(1, raw));
}

// ---------------------------------------------------------------------------
// Driver

struct ActiveLearningConfig {
  RoundPlan plan;
  Strategy strategy;
  SehConfig seh;  // d_img and k are filled in from the pool
  ProbeConfig probe;
  double tau = 0.01;
  std::size_t n_seed_per_class = 0;
};

struct SelectionLogEntry {
  int round = 0;
  std::size_t index = 0;
  double score = 0.0;
  // Evidential quantities; absent for strategies that do not use them.
  std::optional<double> vacuity, dissonance, w_v, w_d;
};

struct AlState {
  std::vector<std::size_t> labeled;    // ascending
  std::vector<std::size_t> unlabeled;  // ascending
  int round = 0;
  std::vector<SelectionLogEntry> selection_log;

  void check_partition(std::size_t pool_size) const {
    if (labeled.size() + unlabeled.size() != pool_size)
      throw InvalidState("AlState: labeled + unlabeled != pool size");
    std::vector<std::size_t> all;
    all.reserve(pool_size);
    std::merge(labeled.begin(), labeled.end(), unlabeled.begin(), unlabeled.end(),
               std::back_inserter(all));
    for (std::size_t i = 0; i < all.size(); ++i)
      if (all[i] != i) throw InvalidState("AlState: labeled and unlabeled are not a partition");
  }
};

// What the scorer sees for one round.
struct ScoringContext {
  const EmbeddingPool& pool;
  const AlState& state;
  int round;
  int total_rounds;
  std::size_t budget;
  const LinearProbe& probe;
  const SehModel* seh;  // null for strategies that do not train a head
  double tau;
  Rng& rng;
};

// Scores for the unlabeled pool (in state.unlabeled order) and the chosen
// positions into that list.
struct RoundSelection {
  std::vector<std::size_t> positions;
  std::vector<SelectionLogEntry> log;  // one per position, index filled by the driver
};

using Scorer = std::function<RoundSelection(const ScoringContext&)>;

struct RoundDiagnostics {
  double seconds = 0.0;
  std::vector<double> seh_epoch_loss;
  std::vector<double> probe_epoch_loss;
  CalibrationReport reported;  // head used for the trajectory's nll/ece
  CalibrationReport probe;     // probe softmax, always
};

struct SeedResult {
  std::uint64_t seed = 0;
  RoundTrajectory trajectory;
  std::vector<SelectionLogEntry> selection_log;
  std::vector<RoundDiagnostics> diagnostics;
  bool early_stop = false;
  std::size_t final_labeled = 0;
  // Reported-head test probabilities after the last completed round.
  Matrix final_probs;
  std::vector<int> test_labels;
  LinearProbe final_probe;
  std::optional<SehModel> final_seh;
};

// Dirichlet expected probabilities for every row, from the head's lambda.
inline Matrix evidential_probabilities(const SehModel& seh, const Matrix& x, const Matrix& s,
                                       double tau) {
  const Vector lam = seh_predict(seh, x, s);
  Matrix out(x.rows(), s.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vector p = expected_probability(evidence_from_similarity(s.row(i), lam[i], tau));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

inline Scorer make_scorer(const Strategy& strategy) {
  switch (strategy.kind) {
    case StrategyKind::sae:
      return [schedule = strategy.schedule](const ScoringContext& ctx) {
        const auto& U = ctx.state.unlabeled;
        const Matrix x = ctx.pool.embeddings.gather_rows(U);
        const Matrix s = ctx.pool.similarities.gather_rows(U);
        const Vector lam = seh_predict(*ctx.seh, x, s);
        Vector vac(U.size()), dis(U.size());
        for (std::size_t i = 0; i < U.size(); ++i) {
          const auto ev = evidence_from_similarity(s.row(i), lam[i], ctx.tau);
          vac[i] = vacuity(ev);
          dis[i] = dissonance(ev);
        }
        const auto w = schedule_weights(ctx.round, ctx.total_rounds, schedule);
        const Vector scores = dual_factor_scores(vac, dis, ctx.round, ctx.total_rounds, schedule);
        RoundSelection sel;
        sel.positions = select_batch(scores, ctx.budget);
        for (std::size_t p : sel.positions)
          sel.log.push_back({ctx.round, 0, scores[p], vac[p], dis[p], w.vacuity, w.dissonance});
        return sel;
      };
    case StrategyKind::random:
      return [](const ScoringContext& ctx) {
        Vector scores(ctx.state.unlabeled.size());
        for (double& v : scores) v = ctx.rng.uniform();
        RoundSelection sel;
        sel.positions = select_batch(scores, ctx.budget);
        for (std::size_t p : sel.positions) sel.log.push_back({ctx.round, 0, scores[p]});
        return sel;
      };
    case StrategyKind::entropy:
    case StrategyKind::margin:
    case StrategyKind::least_confidence:
      return [kind = strategy.kind](const ScoringContext& ctx) {
        const Matrix x = ctx.pool.embeddings.gather_rows(ctx.state.unlabeled);
        const Vector scores = uncertainty_scores(kind, predict_proba(ctx.probe, x));
        RoundSelection sel;
        sel.positions = select_batch(scores, ctx.budget);
        for (std::size_t p : sel.positions) sel.log.push_back({ctx.round, 0, scores[p]});
        return sel;
      };
    case StrategyKind::coreset_kcenter:
      return [](const ScoringContext& ctx) {
        const auto kc = kcenter_greedy(ctx.pool.embeddings, ctx.state.labeled,
                                       ctx.state.unlabeled, ctx.budget);
        RoundSelection sel;
        sel.positions = kc.positions;
        for (std::size_t i = 0; i < kc.positions.size(); ++i)
          sel.log.push_back({ctx.round, 0, kc.distances[i]});
        return sel;
      };
  }
  throw InvalidArgument("make_scorer: unknown strategy");
}

namespace detail {

struct FittedModels {
  LinearProbe probe;
  std::optional<SehModel> seh;
};

inline void fit_models(const EmbeddingPool& pool, const AlState& st,
                       const ActiveLearningConfig& cfg, const SehConfig& seh_cfg, bool with_seh,
                       Rng& rng, FittedModels& models, RoundDiagnostics* diag) {
  if (st.labeled.empty()) return;
  const Matrix x = pool.embeddings.gather_rows(st.labeled);
  std::vector<int> y(st.labeled.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = pool.labels[st.labeled[i]];
  Rng probe_rng = rng.split(11), seh_rng = rng.split(12);
  if (has_two_classes(y))
    models.probe = train_probe(x, y, pool.k, cfg.probe, probe_rng,
                               diag ? &diag->probe_epoch_loss : nullptr);
  if (with_seh && st.labeled.size() >= 2) {
    const Matrix s = pool.similarities.gather_rows(st.labeled);
    const Vector l_cls = per_sample_cross_entropy(models.probe, x, y);
    models.seh = train_seh(x, s, l_cls, seh_cfg, seh_rng, diag ? &diag->seh_epoch_loss : nullptr);
  }
}

}  // namespace detail

// Runs the round loop with an arbitrary scorer. Bookkeeping is identical for
// every strategy; only the scorer differs.
inline SeedResult run_rounds(const EmbeddingPool& pool, const EmbeddingPool& test,
                             const ActiveLearningConfig& cfg, std::uint64_t seed,
                             const Scorer& scorer, bool with_seh) {
  if (pool.n == 0) throw InvalidArgument("run_active_learning: empty pool");
  if (test.n == 0) throw InvalidArgument("run_active_learning: empty test split");
  if (test.d != pool.d || test.k != pool.k)
    throw InvalidArgument("run_active_learning: pool and test shapes differ");
  cfg.plan.validate();

  SehConfig seh_cfg = cfg.seh;
  seh_cfg.d_img = pool.d;
  seh_cfg.k = pool.k;
  if (with_seh) seh_cfg.validate();

  Rng master(seed);
  SeedResult res;
  res.seed = seed;
  res.test_labels = test.labels;

  AlState st;
  if (cfg.n_seed_per_class > 0) {
    Rng seed_rng = master.split(1);
    for (std::size_t c = 0; c < pool.k; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < pool.n; ++i)
        if (pool.labels[i] == static_cast<int>(c)) members.push_back(i);
      seed_rng.shuffle(members);
      members.resize(std::min(members.size(), cfg.n_seed_per_class));
      st.labeled.insert(st.labeled.end(), members.begin(), members.end());
    }
    std::sort(st.labeled.begin(), st.labeled.end());
  }
  for (std::size_t i = 0, j = 0; i < pool.n; ++i) {
    if (j < st.labeled.size() && st.labeled[j] == i) {
      ++j;
      continue;
    }
    st.unlabeled.push_back(i);
  }
  st.check_partition(pool.n);

  RoundPlan plan = cfg.plan;
  plan.initial_pool_size = st.unlabeled.size();

  detail::FittedModels models{LinearProbe::zeros(pool.k, pool.d), std::nullopt};
  if (with_seh) {
    Rng init_rng = master.split(2);
    models.seh = init_seh(seh_cfg, init_rng);
  }
  {
    Rng warm_rng = master.split(3);
    detail::fit_models(pool, st, cfg, seh_cfg, with_seh, warm_rng, models, nullptr);
  }

  for (int t = 1; t <= plan.rounds; ++t) {
    if (st.unlabeled.empty()) {
      res.early_stop = true;
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Rng round_rng = master.split(100 + static_cast<std::uint64_t>(t));
    Rng score_rng = round_rng.split(1);
    st.round = t;
    const std::size_t budget = round_budget(plan, t, st.unlabeled.size());
    const ScoringContext ctx{pool,  st,           t,         plan.rounds, budget,
                             models.probe, models.seh ? &*models.seh : nullptr, cfg.tau,
                             score_rng};
    RoundSelection sel = scorer(ctx);
    if (sel.positions.size() != budget || sel.log.size() != budget)
      throw InvalidState("scorer returned a batch of the wrong size");

    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < budget; ++i) {
      const std::size_t pos = sel.positions[i];
      if (pos >= st.unlabeled.size()) throw InvalidState("scorer returned an invalid position");
      SelectionLogEntry e = sel.log[i];
      e.round = t;
      e.index = st.unlabeled[pos];
      chosen.push_back(e.index);
      st.selection_log.push_back(e);
    }
    std::vector<std::size_t> sorted_chosen = chosen;
    std::sort(sorted_chosen.begin(), sorted_chosen.end());
    if (std::adjacent_find(sorted_chosen.begin(), sorted_chosen.end()) != sorted_chosen.end())
      throw InvalidState("scorer selected the same sample twice");
    std::vector<std::size_t> labeled, unlabeled;
    std::merge(st.labeled.begin(), st.labeled.end(), sorted_chosen.begin(), sorted_chosen.end(),
               std::back_inserter(labeled));
    std::set_difference(st.unlabeled.begin(), st.unlabeled.end(), sorted_chosen.begin(),
                        sorted_chosen.end(), std::back_inserter(unlabeled));
    st.labeled = std::move(labeled);
    st.unlabeled = std::move(unlabeled);
    st.check_partition(pool.n);

    RoundDiagnostics diag;
    Rng fit_rng = round_rng.split(2);
    detail::fit_models(pool, st, cfg, seh_cfg, with_seh, fit_rng, models, &diag);

    const Matrix probe_probs = predict_proba(models.probe, test.embeddings);
    RoundRecord rec;
    rec.round = t;
    rec.n_labeled = st.labeled.size();
    rec.accuracy = top1_accuracy(predict_labels(probe_probs), test.labels);
    diag.probe = calibration_report(probe_probs, test.labels);
    if (with_seh) {
      res.final_probs = evidential_probabilities(*models.seh, test.embeddings, test.similarities,
                                                 cfg.tau);
      diag.reported = calibration_report(res.final_probs, test.labels);
    } else {
      res.final_probs = probe_probs;
      diag.reported = diag.probe;
    }
    rec.nll = diag.reported.nll;
    rec.ece = diag.reported.ece;
    res.trajectory.rounds.push_back(rec);
    diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.diagnostics.push_back(std::move(diag));
  }
  res.selection_log = st.selection_log;
  res.final_labeled = st.labeled.size();
  res.final_probe = models.probe;
  res.final_seh = models.seh;
  return res;
}

inline SeedResult run_active_learning(const EmbeddingPool& pool, const EmbeddingPool& test,
                                      const ActiveLearningConfig& cfg, std::uint64_t seed) {
  return run_rounds(pool, test, cfg, seed, make_scorer(cfg.strategy), cfg.strategy.uses_evidence());
}

}  // namespace sae
