#pragma once

// Differentiable tensor operations. Each op validates shapes, computes the
// forward value and, when any input requires grad, records a closure that
// accumulates input gradients during backward().

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

#include "mtl/numerics/tensor.hpp"

namespace mtl::ops {

Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

// x[m,n] + bias[n] broadcast over rows.
Tensor add_rowwise(const Tensor& x, const Tensor& bias);

// Sum of all entries as a rank-0 tensor.
Tensor sum(const Tensor& x);

// Tanh-approximated GELU.
Tensor gelu(const Tensor& x);

// Row softmax with per-row max subtraction.
Tensor softmax_rows(const Tensor& x);

// Per-row normalization to zero mean / unit (biased) variance, then
// gamma * xhat + beta. Requires at least two columns.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Mean negative log-likelihood over rows with mask[i] != 0. Rows with
// mask[i] == 0 contribute nothing; with no active rows the result is 0 and
// every logit gradient is 0.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets,
                     std::span<const std::uint8_t> mask);

// out[i, :] = table[indices[i], :]
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);

// x is [batch * seq, d]; averages rows whose mask entry is nonzero within each
// sequence. A sequence with no valid rows pools to zeros.
Tensor masked_mean_pool(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t batch,
                        std::size_t seq);

// Multi-head scaled dot-product attention. q, k, v are [batch * seq, d] with
// heads laid out as contiguous column blocks of width d / heads. Keys whose
// mask entry is zero receive exactly zero weight.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 std::span<const std::uint8_t> key_mask, std::size_t batch, std::size_t seq,
                 std::size_t heads);

// Inverted dropout. p == 0 returns x itself.
Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng);

// x * w + b for x[m,in], w[in,out], b[out].
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_rowwise(matmul(x, w), b);
}

}  // namespace mtl::ops
