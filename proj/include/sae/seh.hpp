#pragma once

// Similarity evidence head: a dual-branch MLP mapping an image embedding x and
// its class-similarity vector s to a positive evidence strength lambda.
//
//   z_f    = block2(block1(x))          image branch
//   z_s    = block_s(s)                 similarity branch
//   lambda = softplus(w . [z_f; z_s] + b)
//
// Each block is Linear -> BatchNorm -> ReLU -> Dropout. Gradients are derived
// by hand (seh_backward) and checked against finite differences in the tests.

#include <cmath>
#include <limits>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sae/checkpoint.hpp"
#include "sae/numerics.hpp"

namespace sae {

enum class LossVariant { dual, difficulty_only, entropy_only };
enum class RegressionForm { inverse, log };
enum class Mode { train, eval };

inline const char* to_string(LossVariant v) {
  switch (v) {
    case LossVariant::dual: return "dual";
    case LossVariant::difficulty_only: return "difficulty_only";
    case LossVariant::entropy_only: return "entropy_only";
  }
  return "?";
}

inline const char* to_string(RegressionForm f) {
  return f == RegressionForm::inverse ? "inverse" : "log";
}

struct SehConfig {
  std::size_t d_img = 0;
  std::size_t k = 0;
  std::size_t h1 = 256;
  std::size_t h2 = 128;
  std::size_t h_s = 64;
  double dropout_rate = 0.1;
  double beta = 0.5;
  double epsilon = 1e-3;
  double tau_f = 0.01;
  double learning_rate = 0.002;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double bn_momentum = 0.1;
  // Global gradient-norm cap per step; 0 disables. The entropy targets reach
  // 1/epsilon, which makes unclipped SGD diverge on large labeled sets.
  double grad_clip = 100.0;
  LossVariant loss_variant = LossVariant::dual;
  RegressionForm regression_form = RegressionForm::inverse;

  void validate() const {
    if (d_img == 0 || k == 0 || h1 == 0 || h2 == 0 || h_s == 0)
      throw InvalidArgument("SehConfig: all widths must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw InvalidArgument("SehConfig: dropout_rate must be in [0, 1)");
    if (!(beta >= 0.0)) throw InvalidArgument("SehConfig: beta must be >= 0");
    if (!(epsilon > 0.0)) throw InvalidArgument("SehConfig: epsilon must be > 0");
    if (!(tau_f > 0.0)) throw InvalidArgument("SehConfig: tau_f must be > 0");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("SehConfig: learning_rate must be >= 0");
    if (batch_size < 2) throw InvalidArgument("SehConfig: batch_size must be >= 2");
    if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0))
      throw InvalidArgument("SehConfig: bn_momentum must be in [0, 1]");
    if (!(grad_clip >= 0.0)) throw InvalidArgument("SehConfig: grad_clip must be >= 0");
  }
};

inline constexpr double kBatchNormEps = 1e-5;

struct LinearLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};

struct BatchNorm {
  Vector gamma, beta, running_mean, running_var;

  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

struct MlpBlock {
  LinearLayer linear;
  BatchNorm bn;

  std::size_t in_dim() const { return linear.weight.cols(); }
  std::size_t out_dim() const { return linear.weight.rows(); }

  friend bool operator==(const MlpBlock&, const MlpBlock&) = default;
};

struct SehModel {
  MlpBlock img1, img2, sim;
  Vector fuse_weight;  // h2 + h_s
  double fuse_bias = 0.0;
  bool training = false;
  // Bumped on every parameter update; caches remember the value they saw.
  std::uint64_t version = 0;

  std::size_t d_img() const { return img1.in_dim(); }
  std::size_t k() const { return sim.in_dim(); }

  // Visits every trainable parameter in declaration order.
  template <typename Self, typename Fn>
  static void visit_params(Self& m, Fn&& fn) {
    for (auto* blk : {&m.img1, &m.img2, &m.sim}) {
      fn(std::span(blk->linear.weight.values()));
      fn(std::span(blk->linear.bias));
      fn(std::span(blk->bn.gamma));
      fn(std::span(blk->bn.beta));
    }
    fn(std::span(m.fuse_weight));
    fn(std::span(&m.fuse_bias, 1));
  }

  friend bool operator==(const SehModel&, const SehModel&) = default;
};

struct BlockGradients {
  Matrix weight;
  Vector bias, gamma, beta;
};

struct SehGradients {
  BlockGradients img1, img2, sim;
  Vector fuse_weight;
  double fuse_bias = 0.0;

  template <typename Self, typename Fn>
  static void visit_params(Self& g, Fn&& fn) {
    for (auto* blk : {&g.img1, &g.img2, &g.sim}) {
      fn(std::span(blk->weight.values()));
      fn(std::span(blk->bias));
      fn(std::span(blk->gamma));
      fn(std::span(blk->beta));
    }
    fn(std::span(g.fuse_weight));
    fn(std::span(&g.fuse_bias, 1));
  }
};

// Inverted-dropout multipliers (0 or 1/(1-p)) per block, one row per sample.
struct DropoutMasks {
  Matrix img1, img2, sim;
};

struct BlockCache {
  Matrix input, pre, xhat, activated, output;
  Matrix mask;  // empty in eval mode
  Vector inv_std;
};

struct SehBatchCache {
  Mode mode = Mode::eval;
  std::uint64_t model_version = 0;
  BlockCache img1, img2, sim;
  Matrix fused;  // n x (h2 + h_s)
  Vector pre_softplus;
  Vector lambda;

  std::size_t batch() const { return lambda.size(); }
  DropoutMasks masks() const { return {img1.mask, img2.mask, sim.mask}; }
};

namespace detail {

inline MlpBlock make_block(std::size_t in, std::size_t out, Rng& rng) {
  MlpBlock b;
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  b.linear.weight = Matrix(out, in);
  for (double& w : b.linear.weight.values()) w = rng.uniform(-limit, limit);
  b.linear.bias.assign(out, 0.0);
  b.bn.gamma.assign(out, 1.0);
  b.bn.beta.assign(out, 0.0);
  b.bn.running_mean.assign(out, 0.0);
  b.bn.running_var.assign(out, 1.0);
  return b;
}

inline Matrix make_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Matrix m(rows, cols, 1.0);
  if (rate <= 0.0) return m;
  const double keep = 1.0 / (1.0 - rate);
  for (double& v : m.values()) v = rng.uniform() < rate ? 0.0 : keep;
  return m;
}

// `stats` receives the running-statistics update in train mode (may be null).
inline Matrix block_forward(const MlpBlock& blk, const Matrix& x, Mode mode, double momentum,
                            const Matrix* mask, double dropout_rate, Rng* rng, BatchNorm* stats,
                            BlockCache* cache) {
  const std::size_t n = x.rows(), out = blk.out_dim();
  Matrix pre;
  matmul_abt(x, blk.linear.weight, pre);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out; ++o) pre(r, o) += blk.linear.bias[o];

  Vector mean(out, 0.0), var(out, 0.0), inv_std(out);
  if (mode == Mode::train) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t o = 0; o < out; ++o) mean[o] += pre(r, o);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t o = 0; o < out; ++o) {
        const double d = pre(r, o) - mean[o];
        var[o] += d * d;
      }
    for (double& v : var) v /= static_cast<double>(n);
    if (stats) {
      const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
      for (std::size_t o = 0; o < out; ++o) {
        stats->running_mean[o] = (1.0 - momentum) * stats->running_mean[o] + momentum * mean[o];
        stats->running_var[o] =
            (1.0 - momentum) * stats->running_var[o] + momentum * var[o] * unbias;
      }
    }
  } else {
    mean = blk.bn.running_mean;
    var = blk.bn.running_var;
  }
  for (std::size_t o = 0; o < out; ++o) inv_std[o] = 1.0 / std::sqrt(var[o] + kBatchNormEps);

  Matrix xhat(n, out), act(n, out), y(n, out);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out; ++o) {
      const double h = (pre(r, o) - mean[o]) * inv_std[o];
      xhat(r, o) = h;
      const double a = blk.bn.gamma[o] * h + blk.bn.beta[o];
      act(r, o) = a;
      y(r, o) = a > 0.0 ? a : 0.0;
    }

  Matrix drop;
  if (mode == Mode::train) {
    if (mask) {
      if (mask->rows() != n || mask->cols() != out)
        throw InvalidArgument("seh_forward: dropout mask shape mismatch");
      drop = *mask;
    } else {
      drop = make_mask(n, out, dropout_rate, *rng);
    }
    for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] *= drop.values()[i];
  }

  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->xhat = std::move(xhat);
    cache->activated = std::move(act);
    cache->output = y;
    cache->mask = std::move(drop);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

// Returns d loss / d input (empty when want_input_grad is false).
inline Matrix block_backward(const MlpBlock& blk, const BlockCache& c, const Matrix& dout,
                             BlockGradients& g, bool want_input_grad) {
  const std::size_t n = dout.rows(), out = blk.out_dim();
  const double nd = static_cast<double>(n);
  Matrix dxhat(n, out);
  g.gamma.assign(out, 0.0);
  g.beta.assign(out, 0.0);
  Vector sum_dxhat(out, 0.0), sum_dxhat_xhat(out, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out; ++o) {
      double d = dout(r, o) * c.mask(r, o);
      if (!(c.activated(r, o) > 0.0)) d = 0.0;
      g.gamma[o] += d * c.xhat(r, o);
      g.beta[o] += d;
      const double dh = d * blk.bn.gamma[o];
      dxhat(r, o) = dh;
      sum_dxhat[o] += dh;
      sum_dxhat_xhat[o] += dh * c.xhat(r, o);
    }
  Matrix dpre(n, out);
  g.bias.assign(out, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t o = 0; o < out; ++o) {
      const double v = c.inv_std[o] / nd *
                       (nd * dxhat(r, o) - sum_dxhat[o] - c.xhat(r, o) * sum_dxhat_xhat[o]);
      dpre(r, o) = v;
      g.bias[o] += v;
    }
  g.weight = Matrix(out, blk.in_dim());
  matmul_atb_acc(dpre, c.input, g.weight);
  Matrix dx;
  if (want_input_grad) matmul_ab(dpre, blk.linear.weight, dx);
  return dx;
}

}  // namespace detail

inline SehModel init_seh(const SehConfig& cfg, Rng& rng) {
  cfg.validate();
  SehModel m;
  m.img1 = detail::make_block(cfg.d_img, cfg.h1, rng);
  m.img2 = detail::make_block(cfg.h1, cfg.h2, rng);
  m.sim = detail::make_block(cfg.k, cfg.h_s, rng);
  const std::size_t fuse_in = cfg.h2 + cfg.h_s;
  const double limit = std::sqrt(6.0 / static_cast<double>(fuse_in + 1));
  m.fuse_weight.resize(fuse_in);
  for (double& w : m.fuse_weight) w = rng.uniform(-limit, limit);
  m.fuse_bias = 0.0;
  return m;
}

inline void check_seh_inputs(const SehModel& model, const Matrix& x, const Matrix& s) {
  if (x.cols() != model.d_img())
    throw InvalidArgument("seh_forward: x has " + std::to_string(x.cols()) + " columns, expected " +
                          std::to_string(model.d_img()));
  if (s.cols() != model.k())
    throw InvalidArgument("seh_forward: s has " + std::to_string(s.cols()) + " columns, expected " +
                          std::to_string(model.k()));
  if (x.rows() != s.rows() || x.rows() == 0)
    throw InvalidArgument("seh_forward: x and s must have the same non-zero row count");
}

namespace detail {

inline SehBatchCache seh_forward_impl(const SehModel& model, SehModel* stats_target,
                                      const Matrix& x, const Matrix& s, Mode mode, Rng* rng,
                                      double dropout_rate, double bn_momentum,
                                      const DropoutMasks* fixed_masks) {
  check_seh_inputs(model, x, s);
  if (mode == Mode::train && x.rows() < 2)
    throw BatchTooSmall("seh_forward: train-mode batch normalization needs >= 2 rows");
  SehBatchCache c;
  c.mode = mode;
  c.model_version = model.version;
  const auto* m1 = fixed_masks ? &fixed_masks->img1 : nullptr;
  const auto* m2 = fixed_masks ? &fixed_masks->img2 : nullptr;
  const auto* ms = fixed_masks ? &fixed_masks->sim : nullptr;
  BatchNorm* st1 = stats_target ? &stats_target->img1.bn : nullptr;
  BatchNorm* st2 = stats_target ? &stats_target->img2.bn : nullptr;
  BatchNorm* sts = stats_target ? &stats_target->sim.bn : nullptr;
  Matrix h = block_forward(model.img1, x, mode, bn_momentum, m1, dropout_rate, rng, st1, &c.img1);
  Matrix zf = block_forward(model.img2, h, mode, bn_momentum, m2, dropout_rate, rng, st2, &c.img2);
  Matrix zs = block_forward(model.sim, s, mode, bn_momentum, ms, dropout_rate, rng, sts, &c.sim);

  const std::size_t n = x.rows(), hf = zf.cols(), hs = zs.cols();
  c.fused = Matrix(n, hf + hs);
  c.pre_softplus.resize(n);
  c.lambda.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::copy(zf.row(r).begin(), zf.row(r).end(), c.fused.row(r).begin());
    std::copy(zs.row(r).begin(), zs.row(r).end(), c.fused.row(r).begin() + static_cast<long>(hf));
    const double u = dot(c.fused.row(r), model.fuse_weight) + model.fuse_bias;
    c.pre_softplus[r] = u;
    // softplus underflows to 0 below about -745; keep lambda strictly positive.
    c.lambda[r] = std::max(softplus(u), std::numeric_limits<double>::min());
  }
  return c;
}

}  // namespace detail

// Forward pass. Train mode uses batch statistics, samples inverted-dropout
// masks from `rng` (unless `fixed_masks` is given) and moves the model's
// running statistics toward the batch statistics. Eval mode uses the running
// statistics and no dropout; it never touches the model or the generator.
inline std::pair<Vector, SehBatchCache> seh_forward(SehModel& model, const Matrix& x,
                                                    const Matrix& s, Mode mode, Rng& rng,
                                                    double dropout_rate = 0.1,
                                                    double bn_momentum = 0.1,
                                                    const DropoutMasks* fixed_masks = nullptr) {
  SehBatchCache c = detail::seh_forward_impl(model, mode == Mode::train ? &model : nullptr, x, s,
                                             mode, &rng, dropout_rate, bn_momentum, fixed_masks);
  Vector lam = c.lambda;
  return {std::move(lam), std::move(c)};
}

// Eval-mode forward on a finished model.
inline Vector seh_predict(const SehModel& model, const Matrix& x, const Matrix& s) {
  return detail::seh_forward_impl(model, nullptr, x, s, Mode::eval, nullptr, 0.0, 0.0, nullptr)
      .lambda;
}

// Loss over a batch and its derivative with respect to every lambda_i.
inline std::pair<double, Vector> seh_loss(std::span<const double> lambda,
                                          std::span<const double> l_cls,
                                          std::span<const double> entropy_h,
                                          const SehConfig& cfg) {
  const std::size_t n = lambda.size();
  if (n == 0 || l_cls.size() != n || entropy_h.size() != n)
    throw InvalidArgument("seh_loss: inputs must have equal non-zero length");
  const double nd = static_cast<double>(n);
  const bool use_diff = cfg.loss_variant != LossVariant::entropy_only;
  const bool use_ent = cfg.loss_variant != LossVariant::difficulty_only;
  double diff = 0.0, ent = 0.0;
  Vector grad(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = lambda[i];
    if (!(lam > 0.0)) throw InvalidArgument("seh_loss: lambda must be positive");
    if (use_diff) {
      double a, da;
      if (cfg.regression_form == RegressionForm::inverse) {
        a = 1.0 / (lam + cfg.epsilon);
        da = -a * a;
      } else {
        a = -std::log(lam);
        da = -1.0 / lam;
      }
      const double r = a - l_cls[i];
      diff += r * r;
      grad[i] += 2.0 * r * da / nd;
    }
    if (use_ent) {
      const double r = lam - 1.0 / (entropy_h[i] + cfg.epsilon);
      ent += r * r;
      grad[i] += cfg.beta * 2.0 * r / nd;
    }
  }
  return {diff / nd + cfg.beta * ent / nd, std::move(grad)};
}

inline SehGradients seh_backward(const SehModel& model, const SehBatchCache& cache,
                                 std::span<const double> dloss_dlambda) {
  if (cache.mode != Mode::train)
    throw InvalidState("seh_backward: cache does not come from a train-mode forward");
  if (cache.model_version != model.version)
    throw InvalidState("seh_backward: cache is stale (model changed since forward)");
  const std::size_t n = cache.batch();
  if (dloss_dlambda.size() != n || cache.fused.cols() != model.fuse_weight.size())
    throw InvalidState("seh_backward: cache does not match gradient or model shape");

  SehGradients g;
  const std::size_t hf = model.img2.out_dim(), hs = model.sim.out_dim();
  g.fuse_weight.assign(hf + hs, 0.0);
  Matrix dzf(n, hf), dzs(n, hs);
  for (std::size_t r = 0; r < n; ++r) {
    const double du = dloss_dlambda[r] * sigmoid(cache.pre_softplus[r]);
    g.fuse_bias += du;
    const auto row = cache.fused.row(r);
    for (std::size_t j = 0; j < hf + hs; ++j) g.fuse_weight[j] += du * row[j];
    for (std::size_t j = 0; j < hf; ++j) dzf(r, j) = du * model.fuse_weight[j];
    for (std::size_t j = 0; j < hs; ++j) dzs(r, j) = du * model.fuse_weight[hf + j];
  }
  Matrix dh = detail::block_backward(model.img2, cache.img2, dzf, g.img2, true);
  detail::block_backward(model.img1, cache.img1, dh, g.img1, false);
  detail::block_backward(model.sim, cache.sim, dzs, g.sim, false);
  return g;
}

inline void sgd_step(SehModel& model, SehGradients& grads, double lr) {
  std::vector<std::span<double>> params, gs;
  SehModel::visit_params(model, [&](std::span<double> p) { params.push_back(p); });
  SehGradients::visit_params(grads, [&](std::span<double> p) { gs.push_back(p); });
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t i = 0; i < params[t].size(); ++i) params[t][i] -= lr * gs[t][i];
  ++model.version;
}

// Rescales the gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
inline double clip_grad_norm(SehGradients& grads, double max_norm) {
  double sq = 0.0;
  SehGradients::visit_params(grads, [&](std::span<double> p) {
    for (double v : p) sq += v * v;
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    SehGradients::visit_params(grads, [&](std::span<double> p) {
      for (double& v : p) v *= scale;
    });
  }
  return norm;
}

// Detached entropy targets H[softmax(s_i / tau_f)].
inline Vector entropy_targets(const Matrix& s, double tau_f) {
  Vector h(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) h[i] = entropy(softmax_temp(s.row(i), tau_f));
  return h;
}

// Mini-batch SGD with per-step cosine annealing. Returns the model in eval
// mode; per-epoch mean loss is appended to `epoch_losses` when given.
inline SehModel train_seh(const Matrix& x, const Matrix& s, std::span<const double> l_cls,
                          const SehConfig& cfg, Rng& rng,
                          std::vector<double>* epoch_losses = nullptr) {
  cfg.validate();
  const std::size_t n = x.rows();
  if (n < 2) throw InsufficientData("train_seh: need at least 2 labeled samples");
  if (s.rows() != n || l_cls.size() != n)
    throw InvalidArgument("train_seh: x, s and l_cls lengths differ");
  SehModel model = init_seh(cfg, rng);
  check_seh_inputs(model, x, s);
  const Vector h = entropy_targets(s, cfg.tau_f);

  const auto ranges = batch_ranges(n, cfg.batch_size);
  const std::size_t total_steps = cfg.epochs * ranges.size();
  std::size_t step = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  model.training = true;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (const auto& [lo, hi] : ranges) {
      std::span<const std::size_t> idx(order.data() + lo, hi - lo);
      const Matrix xb = x.gather_rows(idx), sb = s.gather_rows(idx);
      Vector lb(idx.size()), hb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        lb[i] = l_cls[idx[i]];
        hb[i] = h[idx[i]];
      }
      auto [lam, cache] =
          seh_forward(model, xb, sb, Mode::train, rng, cfg.dropout_rate, cfg.bn_momentum);
      auto [loss, dlam] = seh_loss(lam, lb, hb, cfg);
      epoch_loss += loss * static_cast<double>(idx.size());
      SehGradients g = seh_backward(model, cache, dlam);
      clip_grad_norm(g, cfg.grad_clip);
      sgd_step(model, g, cosine_lr(cfg.learning_rate, step++, total_steps));
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / static_cast<double>(n));
  }
  model.training = false;
  return model;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

inline void save_seh(const SehModel& m, const std::string& path) {
  std::vector<ckpt::Tensor> ts;
  auto add_block = [&](const std::string& name, const MlpBlock& b) {
    const std::uint64_t out = b.out_dim(), in = b.in_dim();
    ts.push_back({name + ".weight", {out, in}, b.linear.weight.values()});
    ts.push_back({name + ".bias", {out}, b.linear.bias});
    ts.push_back({name + ".bn.gamma", {out}, b.bn.gamma});
    ts.push_back({name + ".bn.beta", {out}, b.bn.beta});
    ts.push_back({name + ".bn.running_mean", {out}, b.bn.running_mean});
    ts.push_back({name + ".bn.running_var", {out}, b.bn.running_var});
  };
  add_block("img1", m.img1);
  add_block("img2", m.img2);
  add_block("sim", m.sim);
  ts.push_back({"fuse.weight", {m.fuse_weight.size()}, m.fuse_weight});
  ts.push_back({"fuse.bias", {1}, {m.fuse_bias}});
  ckpt::write(path, "seh", ts);
}

inline SehModel load_seh(const std::string& path) {
  const auto ts = ckpt::read(path, "seh");
  auto dims_of = [&](const std::string& name) -> std::vector<std::uint64_t> {
    for (const auto& t : ts)
      if (t.name == name) return t.dims;
    throw LoadError(path, 0, "missing tensor '" + name + "'");
  };
  auto load_block = [&](const std::string& name) {
    const auto wd = dims_of(name + ".weight");
    if (wd.size() != 2) throw LoadError(path, 0, name + ".weight must be rank 2");
    MlpBlock b;
    b.linear.weight = Matrix(wd[0], wd[1], ckpt::find(ts, path, name + ".weight", wd).values);
    b.linear.bias = ckpt::find(ts, path, name + ".bias", {wd[0]}).values;
    b.bn.gamma = ckpt::find(ts, path, name + ".bn.gamma", {wd[0]}).values;
    b.bn.beta = ckpt::find(ts, path, name + ".bn.beta", {wd[0]}).values;
    b.bn.running_mean = ckpt::find(ts, path, name + ".bn.running_mean", {wd[0]}).values;
    b.bn.running_var = ckpt::find(ts, path, name + ".bn.running_var", {wd[0]}).values;
    for (double v : b.bn.running_var)
      if (!(v > 0.0)) throw LoadError(path, 0, name + ": running variance must be > 0");
    return b;
  };
  SehModel m;
  m.img1 = load_block("img1");
  m.img2 = load_block("img2");
  m.sim = load_block("sim");
  if (m.img2.in_dim() != m.img1.out_dim())
    throw LoadError(path, 0, "img2 input width does not match img1 output width");
  const std::uint64_t fuse_in = m.img2.out_dim() + m.sim.out_dim();
  m.fuse_weight = ckpt::find(ts, path, "fuse.weight", {fuse_in}).values;
  m.fuse_bias = ckpt::find(ts, path, "fuse.bias", {1}).values[0];
  return m;
}

}  // namespace sae
