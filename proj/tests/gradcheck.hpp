#pragma once

// Central finite differences over every SEH parameter with dropout masks
// frozen, compared against seh_backward.

#include <algorithm>
#include <cmath>

#include "sae/seh.hpp"

namespace gradcheck {

struct Problem {
  sae::SehConfig cfg;
  sae::SehModel model;
  sae::Matrix x, s;
  sae::Vector l_cls, h;
  sae::Vector weights;  // upstream d objective / d lambda for the linear objective
  sae::DropoutMasks masks;
};

// Linear objective sum_i w_i lambda_i isolates the network backward pass
// from the loss; the full objective is the training loss.
enum class Objective { linear, loss };

inline Problem random_problem(sae::Rng& rng) {
  Problem p;
  p.cfg.d_img = 3 + rng.below(4);
  p.cfg.k = 2 + rng.below(3);
  p.cfg.h1 = 3 + rng.below(4);
  p.cfg.h2 = 2 + rng.below(4);
  p.cfg.h_s = 2 + rng.below(3);
  p.cfg.dropout_rate = 0.2;
  p.cfg.beta = rng.uniform(0.1, 1.0);
  p.cfg.epsilon = 1e-3;
  p.model = sae::init_seh(p.cfg, rng);
  // Non-trivial batch-norm affine parameters and biases.
  sae::SehModel::visit_params(p.model, [&](std::span<double> v) {
    for (double& w : v) w += rng.uniform(-0.3, 0.3);
  });
  const std::size_t n = 4 + rng.below(5);
  p.x = sae::Matrix(n, p.cfg.d_img);
  p.s = sae::Matrix(n, p.cfg.k);
  for (double& v : p.x.values()) v = rng.normal();
  for (double& v : p.s.values()) v = rng.uniform(-1.0, 1.0);
  p.l_cls.resize(n);
  p.h.resize(n);
  p.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.l_cls[i] = rng.uniform(0.05, 2.0);
    p.h[i] = rng.uniform(0.1, 1.5);
    p.weights[i] = rng.uniform(-1.0, 1.0);
  }
  sae::SehModel scratch = p.model;
  auto [lam, cache] = sae::seh_forward(scratch, p.x, p.s, sae::Mode::train, rng,
                                       p.cfg.dropout_rate, p.cfg.bn_momentum);
  p.masks = cache.masks();
  return p;
}

inline double objective_at(const Problem& p, const sae::SehModel& m, Objective obj) {
  sae::SehModel copy = m;
  sae::Rng unused(0);
  auto [lam, cache] = sae::seh_forward(copy, p.x, p.s, sae::Mode::train, unused,
                                       p.cfg.dropout_rate, p.cfg.bn_momentum, &p.masks);
  if (obj == Objective::loss) return sae::seh_loss(lam, p.l_cls, p.h, p.cfg).first;
  double total = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) total += p.weights[i] * lam[i];
  return total;
}

struct Result {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Relative error uses max(|analytic|, |numeric|, floor) as the denominator so
// gradients that are zero up to rounding do not blow the ratio up.
inline Result check(const Problem& p, Objective obj = Objective::linear, double step = 1e-6,
                    double floor = 1e-4) {
  sae::SehModel model = p.model;
  sae::Rng unused(0);
  auto [lam, cache] = sae::seh_forward(model, p.x, p.s, sae::Mode::train, unused,
                                       p.cfg.dropout_rate, p.cfg.bn_momentum, &p.masks);
  model = p.model;  // running statistics do not enter train-mode outputs
  cache.model_version = model.version;
  const sae::Vector dlam =
      obj == Objective::loss ? sae::seh_loss(lam, p.l_cls, p.h, p.cfg).second : p.weights;
  sae::SehGradients g = sae::seh_backward(model, cache, dlam);

  std::vector<std::span<double>> grads;
  sae::SehGradients::visit_params(g, [&](std::span<double> v) { grads.push_back(v); });
  Result r;
  std::size_t tensor = 0;
  sae::SehModel probe = p.model;
  std::vector<std::span<double>> params;
  sae::SehModel::visit_params(probe, [&](std::span<double> v) { params.push_back(v); });
  for (; tensor < params.size(); ++tensor) {
    for (std::size_t i = 0; i < params[tensor].size(); ++i) {
      const double orig = params[tensor][i];
      params[tensor][i] = orig + step;
      const double up = objective_at(p, probe, obj);
      params[tensor][i] = orig - step;
      const double down = objective_at(p, probe, obj);
      params[tensor][i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grads[tensor][i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic - numeric) / denom);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace gradcheck
