#pragma once

// Independent reference implementations used only by the tests. They follow
// the textbook formulas literally and share no code with the library.

#include <cmath>
#include <vector>

namespace oracle {

// Dissonance by the direct double sum, every guard written out.
inline double dissonance(const std::vector<double>& alpha) {
  const std::size_t k = alpha.size();
  double strength = 0.0;
  for (std::size_t i = 0; i < k; ++i) strength = strength + alpha[i];
  std::vector<double> b(k);
  for (std::size_t i = 0; i < k; ++i) b[i] = (alpha[i] - 1.0) / strength;

  double dis = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double others = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) others = others + b[j];
    if (others == 0.0) continue;
    double weighted = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      double bal;
      if (b[i] + b[j] == 0.0) {
        bal = 0.0;
      } else {
        bal = 1.0 - std::fabs(b[i] - b[j]) / (b[i] + b[j]);
      }
      weighted = weighted + b[j] * bal;
    }
    dis = dis + b[i] * (weighted / others);
  }
  return dis;
}

inline std::vector<double> softmax(const std::vector<double>& s, double tau) {
  double mx = s[0];
  for (double v : s) mx = v > mx ? v : mx;
  std::vector<double> out(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = std::exp((s[i] - mx) / tau);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

}  // namespace oracle
