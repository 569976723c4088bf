#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sae/errors.hpp"

namespace sae {

using Vector = std::vector<double>;

// Row-major dense matrix of doubles.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_)
      throw InvalidArgument("Matrix: value count " + std::to_string(data_.size()) +
                            " != rows*cols " + std::to_string(rows_ * cols_));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  // Copy of the listed rows, in order.
  Matrix gather_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      assert(idx[i] < rows_);
      std::copy_n(data_.data() + idx[i] * cols_, cols_, out.data_.data() + i * cols_);
    }
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Dense kernels used by the probe and the evidence head. Loop orders keep the
// innermost loop contiguous; reduction order is fixed so results are
// bit-stable run to run.

// out[n, o] = sum_i a[n, i] * w[o, i]   (a * w^T)
inline void matmul_abt(const Matrix& a, const Matrix& w, Matrix& out) {
  assert(a.cols() == w.cols());
  out = Matrix(a.rows(), w.rows());
  const std::size_t in = a.cols();
  for (std::size_t n = 0; n < a.rows(); ++n) {
    const double* ar = a.values().data() + n * in;
    double* orow = out.values().data() + n * w.rows();
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const double* wr = w.values().data() + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += ar[i] * wr[i];
      orow[o] = acc;
    }
  }
}

// out[o, i] += sum_n g[n, o] * x[n, i]   (g^T * x, accumulated)
inline void matmul_atb_acc(const Matrix& g, const Matrix& x, Matrix& out) {
  assert(g.rows() == x.rows() && out.rows() == g.cols() && out.cols() == x.cols());
  const std::size_t in = x.cols();
  for (std::size_t n = 0; n < g.rows(); ++n) {
    const double* xr = x.values().data() + n * in;
    for (std::size_t o = 0; o < g.cols(); ++o) {
      const double go = g(n, o);
      if (go == 0.0) continue;
      double* orow = out.values().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) orow[i] += go * xr[i];
    }
  }
}

// out[n, i] = sum_o g[n, o] * w[o, i]   (g * w)
inline void matmul_ab(const Matrix& g, const Matrix& w, Matrix& out) {
  assert(g.cols() == w.rows());
  out = Matrix(g.rows(), w.cols());
  const std::size_t in = w.cols();
  for (std::size_t n = 0; n < g.rows(); ++n) {
    double* orow = out.values().data() + n * in;
    for (std::size_t o = 0; o < g.cols(); ++o) {
      const double go = g(n, o);
      if (go == 0.0) continue;
      const double* wr = w.values().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) orow[i] += go * wr[i];
    }
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline std::size_t argmax(std::span<const double> v) {
  assert(!v.empty());
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// ---------------------------------------------------------------------------
// Scalar / vector primitives

// Temperature-scaled softmax with max subtraction.
inline Vector softmax_temp(std::span<const double> s, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw InvalidArgument("softmax_temp: tau must be a positive finite number");
  if (s.empty()) throw InvalidArgument("softmax_temp: empty input");
  if (!all_finite(s)) throw InvalidArgument("softmax_temp: non-finite input");
  const double mx = *std::max_element(s.begin(), s.end());
  Vector out(s.size());
  double z = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    out[k] = std::exp((s[k] - mx) / tau);
    z += out[k];
  }
  for (double& v : out) v /= z;
  return out;
}

// log(sum exp(v)) without overflow.
inline double log_sum_exp(std::span<const double> v) {
  assert(!v.empty());
  const double mx = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double x : v) z += std::exp(x - mx);
  return mx + std::log(z);
}

inline void check_probability_vector(std::span<const double> p, double tol = 1e-9) {
  if (p.empty()) throw InvalidArgument("probability vector is empty");
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidArgument("probability vector has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > tol)
    throw InvalidArgument("probability vector sums to " + std::to_string(sum));
}

// Shannon entropy in nats; 0 ln 0 := 0.
inline double entropy(std::span<const double> p) {
  check_probability_vector(p);
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return std::max(h, 0.0);
}

inline double softplus(double u) {
  return u <= 0.0 ? std::log1p(std::exp(u)) : u + std::log1p(std::exp(-u));
}

// d softplus / du.
inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// (v - min) / (max - min); constant input maps to all zeros.
inline Vector min_max_normalize(std::span<const double> v) {
  Vector out(v.size(), 0.0);
  if (v.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / range;
  return out;
}

// ---------------------------------------------------------------------------
// Seeded generator: xoshiro256** (Blackman & Vigna), state expanded from a
// 64-bit seed with splitmix64. split() derives an independent child by
// re-seeding splitmix64 with a draw from the parent mixed with a stream tag,
// so a parent can hand out per-task generators deterministically.
// Normal deviates use Box-Muller so streams are identical across standard
// library implementations.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
    has_spare_ = false;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection-sampled (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  Rng split(std::uint64_t stream = 0) {
    return Rng(next_u64() ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

  friend bool operator==(const Rng&, const Rng&) = default;

private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Cosine-annealed learning rate for optimizer step `step` of `total_steps`.
inline double cosine_lr(double base_lr, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return base_lr;
  return base_lr * 0.5 *
         (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                         static_cast<double>(total_steps)));
}

// Mini-batch partition of a shuffled index list. A trailing batch of a single
// row is merged into its predecessor (batch-norm needs two rows).
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                                     std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n == 0 || batch == 0) return out;
  for (std::size_t b = 0; b < n; b += batch) out.emplace_back(b, std::min(n, b + batch));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = n;
    out.pop_back();
  }
  return out;
}

}  // namespace sae
