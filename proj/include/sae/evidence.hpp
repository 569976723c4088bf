#pragma once

#include <cmath>
#include <span>

#include "sae/numerics.hpp"

namespace sae {

// Dirichlet concentration vector alpha = evidence + 1.
class DirichletEvidence {
public:
  explicit DirichletEvidence(Vector alpha) : alpha_(std::move(alpha)) {
    if (alpha_.size() < 2) throw InvalidArgument("DirichletEvidence: need at least 2 classes");
    strength_ = 0.0;
    for (double a : alpha_) {
      if (!std::isfinite(a) || a < 1.0)
        throw InvalidArgument("DirichletEvidence: every alpha must be finite and >= 1");
      strength_ += a;
    }
  }

  const Vector& alpha() const noexcept { return alpha_; }
  std::size_t k() const noexcept { return alpha_.size(); }
  // S = sum of alpha.
  double strength() const noexcept { return strength_; }

private:
  Vector alpha_;
  double strength_ = 0.0;
};

struct UncertaintyDecomposition {
  double vacuity = 1.0;
  double dissonance = 0.0;
  Vector belief;
  Vector expected_prob;
};

// alpha_k = lambda * softmax(s / tau)_k + 1
inline DirichletEvidence evidence_from_similarity(std::span<const double> s, double lambda,
                                                  double tau) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("evidence_from_similarity: lambda must be positive and finite");
  if (s.size() < 2) throw InvalidArgument("evidence_from_similarity: need K >= 2");
  Vector alpha = softmax_temp(s, tau);
  for (double& a : alpha) a = lambda * a + 1.0;
  return DirichletEvidence(std::move(alpha));
}

inline double vacuity(const DirichletEvidence& ev) {
  return static_cast<double>(ev.k()) / ev.strength();
}

inline Vector belief_masses(const DirichletEvidence& ev) {
  Vector b(ev.k());
  for (std::size_t i = 0; i < ev.k(); ++i) b[i] = (ev.alpha()[i] - 1.0) / ev.strength();
  return b;
}

inline Vector expected_probability(const DirichletEvidence& ev) {
  Vector p(ev.k());
  for (std::size_t i = 0; i < ev.k(); ++i) p[i] = ev.alpha()[i] / ev.strength();
  return p;
}

// Balance between two belief masses; Bal(0, 0) := 0.
inline double belief_balance(double bi, double bj) {
  const double sum = bi + bj;
  if (sum <= 0.0) return 0.0;
  return 1.0 - std::abs(bi - bj) / sum;
}

// Dissonance of a belief vector. Terms with no competing belief contribute 0.
inline double dissonance_from_belief(std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] <= 0.0) continue;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j == i) continue;
      num += b[j] * belief_balance(b[i], b[j]);
      den += b[j];
    }
    if (den > 0.0) total += b[i] * num / den;
  }
  return std::clamp(total, 0.0, 1.0);
}

inline double dissonance(const DirichletEvidence& ev) {
  return dissonance_from_belief(belief_masses(ev));
}

inline UncertaintyDecomposition decompose(const DirichletEvidence& ev) {
  UncertaintyDecomposition u;
  u.vacuity = vacuity(ev);
  u.belief = belief_masses(ev);
  u.dissonance = dissonance_from_belief(u.belief);
  u.expected_prob = expected_probability(ev);
  return u;
}

}  // namespace sae
