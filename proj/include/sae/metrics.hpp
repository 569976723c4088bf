#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "sae/numerics.hpp"

namespace sae {

inline constexpr std::size_t kCalibrationBins = 15;
inline constexpr double kNllFloor = 1e-12;

struct ReliabilityBin {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct CalibrationReport {
  double nll = 0.0;
  double ece = 0.0;
  std::array<ReliabilityBin, kCalibrationBins> bins{};
  std::size_t n_samples = 0;
};

struct RoundRecord {
  int round = 0;
  std::size_t n_labeled = 0;
  double accuracy = 0.0;
  double nll = 0.0;
  double ece = 0.0;
};

struct RoundTrajectory {
  std::vector<RoundRecord> rounds;
};

inline double top1_accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw InvalidArgument("top1_accuracy: inputs must have equal non-zero length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline double nll(const Matrix& probs, std::span<const int> labels) {
  if (probs.rows() != labels.size() || labels.empty())
    throw InvalidArgument("nll: row count and label count differ");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    check_probability_vector(probs.row(i));
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probs.cols())
      throw InvalidArgument("nll: label out of range");
    total -= std::log(std::max(probs(i, static_cast<std::size_t>(labels[i])), kNllFloor));
  }
  return total / static_cast<double>(probs.rows());
}

// Bin index under the rule: bin 0 = [0, 1/15], bin b = (b/15, (b+1)/15].
inline std::size_t calibration_bin(double confidence) {
  for (std::size_t b = 0; b < kCalibrationBins; ++b) {
    const double hi = static_cast<double>(b + 1) / static_cast<double>(kCalibrationBins);
    if (confidence <= hi) return b;
  }
  return kCalibrationBins - 1;
}

struct EceResult {
  double ece = 0.0;
  std::array<ReliabilityBin, kCalibrationBins> bins{};
};

inline EceResult ece_15(std::span<const double> confidences, const std::vector<bool>& correct) {
  if (confidences.size() != correct.size())
    throw InvalidArgument("ece_15: confidences and correctness flags differ in length");
  EceResult r;
  std::array<double, kCalibrationBins> conf_sum{}, hit_sum{};
  for (std::size_t b = 0; b < kCalibrationBins; ++b) {
    r.bins[b].lo = static_cast<double>(b) / static_cast<double>(kCalibrationBins);
    r.bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(kCalibrationBins);
  }
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("ece_15: confidence outside [0, 1]");
    const std::size_t b = calibration_bin(c);
    ++r.bins[b].count;
    conf_sum[b] += c;
    hit_sum[b] += correct[i] ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(confidences.size());
  for (std::size_t b = 0; b < kCalibrationBins; ++b) {
    auto& bin = r.bins[b];
    if (bin.count == 0) continue;
    const double cnt = static_cast<double>(bin.count);
    bin.mean_confidence = conf_sum[b] / cnt;
    bin.accuracy = hit_sum[b] / cnt;
    r.ece += cnt / n * std::abs(bin.accuracy - bin.mean_confidence);
  }
  return r;
}

// Confidence = max class probability; correct = argmax equals label.
inline CalibrationReport calibration_report(const Matrix& probs, std::span<const int> labels) {
  std::vector<double> conf(probs.rows());
  std::vector<bool> hits(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const std::size_t a = argmax(probs.row(i));
    conf[i] = std::clamp(probs(i, a), 0.0, 1.0);
    hits[i] = static_cast<int>(a) == labels[i];
  }
  const EceResult e = ece_15(conf, hits);
  CalibrationReport rep;
  rep.nll = nll(probs, labels);
  rep.ece = e.ece;
  rep.bins = e.bins;
  rep.n_samples = probs.rows();
  return rep;
}

inline double round_efficiency(const RoundTrajectory& traj) {
  const RoundRecord *r3 = nullptr, *r5 = nullptr;
  for (const auto& r : traj.rounds) {
    if (r.round == 3) r3 = &r;
    if (r.round == 5) r5 = &r;
  }
  if (!r3 || !r5) throw InvalidState("round_efficiency: trajectory lacks round 3 or round 5");
  if (r5->accuracy == 0.0) throw InvalidState("round_efficiency: accuracy at round 5 is zero");
  return r3->accuracy / r5->accuracy;
}

inline std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string reliability_csv(const CalibrationReport& rep) {
  std::string out = "bin_lo,bin_hi,count,mean_conf,accuracy\n";
  for (const auto& b : rep.bins) {
    out += format_fixed6(b.lo) + ',' + format_fixed6(b.hi) + ',' + std::to_string(b.count) + ',' +
           format_fixed6(b.mean_confidence) + ',' + format_fixed6(b.accuracy) + '\n';
  }
  return out;
}

}  // namespace sae
