#include "mtl/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mtl/error.hpp"
#include "mtl/kernels/kernels.hpp"

namespace mtl::ops {
namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw RankError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                    shape_string(x.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void accumulate(const Tensor& target, std::span<const double> delta) {
  if (!target.requires_grad()) return;
  auto g = target.mutable_grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner extents disagree " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data());
  return Tensor::from_op({m, n}, std::move(out), {a, b},
                         [a, b, m, n, k](std::span<const double> g) mutable {
                           if (a.requires_grad()) {
                             kernels::gemm_nt(m, k, n, g.data(), b.data().data(),
                                              a.mutable_grad().data());
                           }
                           if (b.requires_grad()) {
                             kernels::gemm_tn(k, n, m, a.data().data(), g.data(),
                                              b.mutable_grad().data());
                           }
                         });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return Tensor::from_op(a.shape(), std::move(out), {a, b},
                         [a, b](std::span<const double> g) mutable {
                           accumulate(a, g);
                           accumulate(b, g);
                         });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  return Tensor::from_op(a.shape(), std::move(out), {a, b},
                         [a, b](std::span<const double> g) mutable {
                           if (a.requires_grad()) {
                             auto ga = a.mutable_grad();
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.at(i);
                           }
                           if (b.requires_grad()) {
                             auto gb = b.mutable_grad();
                             for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.at(i);
                           }
                         });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x.at(i);
  return Tensor::from_op(x.shape(), std::move(out), {x},
                         [x, factor](std::span<const double> g) mutable {
                           auto gx = x.mutable_grad();
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
                         });
}

Tensor add_rowwise(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_rowwise");
  require_rank(bias, 1, "add_rowwise");
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.numel() != n) {
    throw DimensionError("add_rowwise: bias " + shape_string(bias.shape()) + " vs rows of " +
                         shape_string(x.shape()));
  }
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.at(i * n + j) + bias.at(j);
  }
  return Tensor::from_op(x.shape(), std::move(out), {x, bias},
                         [x, bias, m, n](std::span<const double> g) mutable {
                           accumulate(x, g);
                           if (bias.requires_grad()) {
                             auto gb = bias.mutable_grad();
                             for (std::size_t i = 0; i < m; ++i) {
                               for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
                             }
                           }
                         });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return Tensor::from_op({}, {total}, {x}, [x](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (double& v : gx) v += g[0];
  });
}

Tensor gelu(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.at(i);
    out[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  }
  return Tensor::from_op(x.shape(), std::move(out), {x}, [x](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = x.at(i);
      const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      gx[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
    }
  });
}

Tensor softmax_rows(const Tensor& x) {
  require_rank(x, 2, "softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  auto y = std::make_shared<std::vector<double>>(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double* out = y->data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = std::exp(row[j] - mx);
      z += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= z;
  }
  std::vector<double> values = *y;
  return Tensor::from_op(x.shape(), std::move(values), {x},
                         [x, y, m, n](std::span<const double> g) mutable {
                           auto gx = x.mutable_grad();
                           for (std::size_t i = 0; i < m; ++i) {
                             const double* yr = y->data() + i * n;
                             const double* gr = g.data() + i * n;
                             const double inner = kernels::dot(gr, yr, n);
                             for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += yr[j] * (gr[j] - inner);
                           }
                         });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(x, 2, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (n < 2) throw DimensionError("layer_norm: degenerate normalization over " + std::to_string(n) + " column(s)");
  if (!(eps > 0.0)) throw DimensionError("layer_norm: eps must be positive");
  if (gamma.numel() != n || beta.numel() != n || gamma.rank() != 1 || beta.rank() != 1) {
    throw DimensionError("layer_norm: gamma " + shape_string(gamma.shape()) + " / beta " +
                         shape_string(beta.shape()) + " vs " + shape_string(x.shape()));
  }
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    const double r = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = r;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mean) * r;
      (*xhat)[i * n + j] = h;
      out[i * n + j] = gamma.at(j) * h + beta.at(j);
    }
  }
  return Tensor::from_op(
      x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, m, n](std::span<const double> g) mutable {
        if (gamma.requires_grad() || beta.requires_grad()) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              if (gamma.requires_grad()) gamma.mutable_grad()[j] += g[i * n + j] * (*xhat)[i * n + j];
              if (beta.requires_grad()) beta.mutable_grad()[j] += g[i * n + j];
            }
          }
        }
        if (!x.requires_grad()) return;
        auto gx = x.mutable_grad();
        const double inv_n = 1.0 / static_cast<double>(n);
        std::vector<double> dh(n);
        for (std::size_t i = 0; i < m; ++i) {
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            dh[j] = g[i * n + j] * gamma.at(j);
            mean_dh += dh[j];
            mean_dh_h += dh[j] * (*xhat)[i * n + j];
          }
          mean_dh *= inv_n;
          mean_dh_h *= inv_n;
          for (std::size_t j = 0; j < n; ++j) {
            gx[i * n + j] += (*inv_std)[i] * (dh[j] - mean_dh - (*xhat)[i * n + j] * mean_dh_h);
          }
        }
      });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets,
                     std::span<const std::uint8_t> mask) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t m = logits.rows(), k = logits.cols();
  if (targets.size() != m || mask.size() != m) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets / " +
                         std::to_string(mask.size()) + " mask entries for logits " +
                         shape_string(logits.shape()));
  }
  std::size_t active = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= k) {
      throw LabelError("cross_entropy: target " + std::to_string(targets[i]) + " out of range [0, " +
                           std::to_string(k) + ") at row " + std::to_string(i),
                       i);
    }
    ++active;
  }
  // Softmax of active rows, kept for backward.
  auto probs = std::make_shared<std::vector<double>>(m * k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    const double* row = logits.data().data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double log_z = mx + std::log(z);
    total += log_z - row[targets[i]];
    for (std::size_t j = 0; j < k; ++j) (*probs)[i * k + j] = std::exp(row[j] - log_z);
  }
  const double loss = active ? total / static_cast<double>(active) : 0.0;
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  return Tensor::from_op(
      {}, {loss}, {logits},
      [logits, probs, tgt = std::move(tgt), msk = std::move(msk), active, m, k](
          std::span<const double> g) mutable {
        if (active == 0) return;
        auto gl = logits.mutable_grad();
        const double w = g[0] / static_cast<double>(active);
        for (std::size_t i = 0; i < m; ++i) {
          if (!msk[i]) continue;
          for (std::size_t j = 0; j < k; ++j) {
            const double onehot = static_cast<std::size_t>(tgt[i]) == j ? 1.0 : 0.0;
            gl[i * k + j] += w * ((*probs)[i * k + j] - onehot);
          }
        }
      });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
  require_rank(table, 2, "gather_rows");
  const std::size_t v = table.rows(), d = table.cols();
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  std::vector<double> out(indices.size() * d);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= v) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[i]) + " outside table " +
                           shape_string(table.shape()));
    }
    std::copy_n(table.data().data() + indices[i] * d, d, out.data() + i * d);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return Tensor::from_op({indices.size(), d}, std::move(out), {table},
                         [table, idx = std::move(idx), d](std::span<const double> g) mutable {
                           auto gt = table.mutable_grad();
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                             double* dst = gt.data() + idx[i] * d;
                             const double* src = g.data() + i * d;
                             for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                           }
                         });
}

Tensor masked_mean_pool(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t batch,
                        std::size_t seq) {
  require_rank(x, 2, "masked_mean_pool");
  if (x.rows() != batch * seq || mask.size() != batch * seq) {
    throw DimensionError("masked_mean_pool: input " + shape_string(x.shape()) + " / mask of " +
                         std::to_string(mask.size()) + " for batch " + std::to_string(batch) +
                         " x seq " + std::to_string(seq));
  }
  const std::size_t d = x.cols();
  std::vector<double> inv_count(batch, 0.0);
  std::vector<double> out(batch * d, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t count = 0;
    for (std::size_t t = 0; t < seq; ++t) {
      if (!mask[b * seq + t]) continue;
      ++count;
      const double* row = x.data().data() + (b * seq + t) * d;
      for (std::size_t j = 0; j < d; ++j) out[b * d + j] += row[j];
    }
    if (count) {
      inv_count[b] = 1.0 / static_cast<double>(count);
      for (std::size_t j = 0; j < d; ++j) out[b * d + j] *= inv_count[b];
    }
  }
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  return Tensor::from_op({batch, d}, std::move(out), {x},
                         [x, msk = std::move(msk), inv_count = std::move(inv_count), batch, seq,
                          d](std::span<const double> g) mutable {
                           auto gx = x.mutable_grad();
                           for (std::size_t b = 0; b < batch; ++b) {
                             for (std::size_t t = 0; t < seq; ++t) {
                               if (!msk[b * seq + t]) continue;
                               kernels::axpy(inv_count[b], g.data() + b * d,
                                             gx.data() + (b * seq + t) * d, d);
                             }
                           }
                         });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 std::span<const std::uint8_t> key_mask, std::size_t batch, std::size_t seq,
                 std::size_t heads) {
  require_rank(q, 2, "attention");
  require_same_shape(q, k, "attention");
  require_same_shape(q, v, "attention");
  const std::size_t d = q.cols();
  if (q.rows() != batch * seq || key_mask.size() != batch * seq) {
    throw DimensionError("attention: input " + shape_string(q.shape()) + " / mask of " +
                         std::to_string(key_mask.size()) + " for batch " + std::to_string(batch) +
                         " x seq " + std::to_string(seq));
  }
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(d) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

  // probs[((b * heads + h) * seq + i) * seq + j]
  auto probs = std::make_shared<std::vector<double>>(batch * heads * seq * seq, 0.0);
  std::vector<double> out(batch * seq * d, 0.0);
  const double* qd = q.data().data();
  const double* kd = k.data().data();
  const double* vd = v.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const std::uint8_t* valid = key_mask.data() + b * seq;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t col = h * dh;
      for (std::size_t i = 0; i < seq; ++i) {
        double* p = probs->data() + ((b * heads + h) * seq + i) * seq;
        const double* qi = qd + (b * seq + i) * d + col;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < seq; ++j) {
          if (!valid[j]) continue;
          p[j] = scale_factor * kernels::dot(qi, kd + (b * seq + j) * d + col, dh);
          mx = std::max(mx, p[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          if (!valid[j]) continue;
          p[j] = std::exp(p[j] - mx);
          z += p[j];
        }
        double* oi = out.data() + (b * seq + i) * d + col;
        for (std::size_t j = 0; j < seq; ++j) {
          if (!valid[j]) continue;
          p[j] /= z;
          kernels::axpy(p[j], vd + (b * seq + j) * d + col, oi, dh);
        }
      }
    }
  }
  std::vector<std::uint8_t> msk(key_mask.begin(), key_mask.end());
  return Tensor::from_op(
      q.shape(), std::move(out), {q, k, v},
      [q, k, v, probs, msk = std::move(msk), batch, seq, heads, d, dh,
       scale_factor](std::span<const double> g) mutable {
        std::vector<double> dp(seq);
        const double* qd = q.data().data();
        const double* kd = k.data().data();
        const double* vd = v.data().data();
        for (std::size_t b = 0; b < batch; ++b) {
          const std::uint8_t* valid = msk.data() + b * seq;
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t col = h * dh;
            for (std::size_t i = 0; i < seq; ++i) {
              const double* p = probs->data() + ((b * heads + h) * seq + i) * seq;
              const double* gi = g.data() + (b * seq + i) * d + col;
              double inner = 0.0;
              for (std::size_t j = 0; j < seq; ++j) {
                if (!valid[j]) continue;
                dp[j] = kernels::dot(gi, vd + (b * seq + j) * d + col, dh);
                inner += p[j] * dp[j];
                if (v.requires_grad()) {
                  kernels::axpy(p[j], gi, v.mutable_grad().data() + (b * seq + j) * d + col, dh);
                }
              }
              if (!q.requires_grad() && !k.requires_grad()) continue;
              double* gq = q.requires_grad() ? q.mutable_grad().data() + (b * seq + i) * d + col
                                             : nullptr;
              const double* qi = qd + (b * seq + i) * d + col;
              for (std::size_t j = 0; j < seq; ++j) {
                if (!valid[j]) continue;
                const double ds = scale_factor * p[j] * (dp[j] - inner);
                if (q.requires_grad()) kernels::axpy(ds, kd + (b * seq + j) * d + col, gq, dh);
                if (k.requires_grad()) {
                  kernels::axpy(ds, qi, k.mutable_grad().data() + (b * seq + j) * d + col, dh);
                }
              }
            }
          }
        }
      });
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw DimensionError("dropout: rate must be below 1");
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution keep(1.0 - p);
  auto factors = std::make_shared<std::vector<double>>(x.numel());
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*factors)[i] = keep(rng) ? keep_scale : 0.0;
    out[i] = x.at(i) * (*factors)[i];
  }
  return Tensor::from_op(x.shape(), std::move(out), {x},
                         [x, factors](std::span<const double> g) mutable {
                           auto gx = x.mutable_grad();
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*factors)[i];
                         });
}

}  // namespace mtl::ops
