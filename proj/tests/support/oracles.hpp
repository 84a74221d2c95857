#pragma once

// Independent reference implementations used only by tests. They are
// deliberately naive and share no code with the library.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace oracle {

// C = A[m,k] * B[k,n], plain triple loop.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                  std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  return c;
}

// Mode of binary votes; nullopt when the two counts are equal.
inline std::optional<int> mode(const std::vector<int>& votes) {
  if (votes.empty()) return std::nullopt;
  std::size_t ones = 0;
  for (int v : votes) ones += v == 1;
  const std::size_t zeros = votes.size() - ones;
  if (ones == zeros) return std::nullopt;
  return ones > zeros ? 1 : 0;
}

struct MacroScores {
  double precision, recall, f1;
};

// Per-class scores by counting each class separately, undefined ratios as 0.
inline MacroScores macro_scores(const std::vector<int>& labels, const std::vector<int>& preds) {
  std::array<double, 2> p{}, r{}, f{};
  for (int cls = 0; cls < 2; ++cls) {
    double tp = 0, pred_pos = 0, actual_pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (preds[i] == cls) pred_pos += 1;
      if (labels[i] == cls) actual_pos += 1;
      if (preds[i] == cls && labels[i] == cls) tp += 1;
    }
    p[cls] = pred_pos > 0 ? tp / pred_pos : 0.0;
    r[cls] = actual_pos > 0 ? tp / actual_pos : 0.0;
    f[cls] = p[cls] + r[cls] > 0 ? 2 * p[cls] * r[cls] / (p[cls] + r[cls]) : 0.0;
  }
  return {(p[0] + p[1]) / 2, (r[0] + r[1]) / 2, (f[0] + f[1]) / 2};
}

}  // namespace oracle
