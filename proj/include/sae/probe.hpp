#pragma once

// Linear softmax probe over frozen embeddings.

#include <set>
#include <span>
#include <string>

#include "sae/checkpoint.hpp"
#include "sae/numerics.hpp"

namespace sae {

struct ProbeConfig {
  // 1/L for softmax cross-entropy on unit-norm inputs with a bias column.
  double learning_rate = 1.0;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
};

struct LinearProbe {
  Matrix weight;  // k x d
  Vector bias;    // k

  static LinearProbe zeros(std::size_t k, std::size_t d) { return {Matrix(k, d), Vector(k, 0.0)}; }

  std::size_t k() const { return weight.rows(); }
  std::size_t d() const { return weight.cols(); }

  friend bool operator==(const LinearProbe&, const LinearProbe&) = default;
};

inline Matrix probe_logits(const LinearProbe& probe, const Matrix& x) {
  if (x.cols() != probe.d())
    throw InvalidArgument("probe: input has " + std::to_string(x.cols()) + " columns, expected " +
                          std::to_string(probe.d()));
  Matrix logits;
  matmul_abt(x, probe.weight, logits);
  for (std::size_t r = 0; r < logits.rows(); ++r)
    for (std::size_t c = 0; c < logits.cols(); ++c) logits(r, c) += probe.bias[c];
  return logits;
}

inline Matrix predict_proba(const LinearProbe& probe, const Matrix& x) {
  Matrix p = probe_logits(probe, x);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const Vector row = softmax_temp(p.row(r), 1.0);
    std::copy(row.begin(), row.end(), p.row(r).begin());
  }
  return p;
}

// -log p(y_i | x_i) via log-sum-exp of the logits.
inline Vector per_sample_cross_entropy(const LinearProbe& probe, const Matrix& x,
                                       std::span<const int> y) {
  if (y.size() != x.rows()) throw InvalidArgument("per_sample_cross_entropy: length mismatch");
  const Matrix logits = probe_logits(probe, x);
  Vector out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= probe.k())
      throw InvalidArgument("per_sample_cross_entropy: label out of range");
    out[i] = std::max(0.0, log_sum_exp(logits.row(i)) - logits(i, static_cast<std::size_t>(y[i])));
  }
  return out;
}

inline bool has_two_classes(std::span<const int> y) {
  return std::set<int>(y.begin(), y.end()).size() >= 2;
}

// Zero-initialized mini-batch SGD on mean cross-entropy with cosine annealing.
inline LinearProbe train_probe(const Matrix& x, std::span<const int> y, std::size_t k,
                               const ProbeConfig& cfg, Rng& rng,
                               std::vector<double>* epoch_losses = nullptr) {
  if (y.size() != x.rows() || x.rows() == 0)
    throw InvalidArgument("train_probe: x and y must have equal non-zero length");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= k)
      throw InvalidArgument("train_probe: label out of range");
  if (!has_two_classes(y)) throw DegenerateLabels("train_probe: all labels are identical");
  if (cfg.batch_size == 0) throw InvalidArgument("train_probe: batch_size must be >= 1");

  const std::size_t n = x.rows(), d = x.cols();
  LinearProbe probe = LinearProbe::zeros(k, d);
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = cfg.epochs * batches;
  std::size_t step = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Matrix gw(k, d);
  Vector gb(k);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t lo = 0; lo < n; lo += cfg.batch_size) {
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      const double nb = static_cast<double>(hi - lo);
      std::fill(gw.values().begin(), gw.values().end(), 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t t = lo; t < hi; ++t) {
        const auto xi = x.row(order[t]);
        const auto yi = static_cast<std::size_t>(y[order[t]]);
        Vector logit(k);
        for (std::size_t c = 0; c < k; ++c) logit[c] = dot(probe.weight.row(c), xi) + probe.bias[c];
        const double lse = log_sum_exp(logit);
        epoch_loss += lse - logit[yi];
        for (std::size_t c = 0; c < k; ++c) {
          const double g = (std::exp(logit[c] - lse) - (c == yi ? 1.0 : 0.0)) / nb;
          gb[c] += g;
          auto gr = gw.row(c);
          for (std::size_t j = 0; j < d; ++j) gr[j] += g * xi[j];
        }
      }
      const double lr = cosine_lr(cfg.learning_rate, step++, total_steps);
      for (std::size_t i = 0; i < gw.size(); ++i) probe.weight.values()[i] -= lr * gw.values()[i];
      for (std::size_t c = 0; c < k; ++c) probe.bias[c] -= lr * gb[c];
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / static_cast<double>(n));
  }
  return probe;
}

inline std::vector<int> predict_labels(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) out[i] = static_cast<int>(argmax(probs.row(i)));
  return out;
}

inline void save_probe(const LinearProbe& p, const std::string& path) {
  ckpt::write(path, "probe",
              {{"weight", {p.k(), p.d()}, p.weight.values()}, {"bias", {p.k()}, p.bias}});
}

inline LinearProbe load_probe(const std::string& path) {
  const auto ts = ckpt::read(path, "probe");
  for (const auto& t : ts) {
    if (t.name != "weight") continue;
    if (t.dims.size() != 2) throw LoadError(path, 0, "probe weight must be rank 2");
    LinearProbe p;
    p.weight = Matrix(t.dims[0], t.dims[1], t.values);
    p.bias = ckpt::find(ts, path, "bias", {t.dims[0]}).values;
    return p;
  }
  throw LoadError(path, 0, "missing tensor 'weight'");
}

}  // namespace sae
