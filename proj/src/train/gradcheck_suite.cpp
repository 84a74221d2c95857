#include "mtl/train/gradcheck_suite.hpp"

#include <memory>
#include <random>

#include "mtl/encoder/encoder.hpp"
#include "mtl/model/model.hpp"
#include "mtl/numerics/ops.hpp"
#include "mtl/numerics/random.hpp"

namespace mtl::train {
namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor random_tensor(Rng& rng, Shape shape, double scale, bool requires_grad) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

// Projects an arbitrary tensor to a scalar with fixed random weights, so
// every output element reaches the loss with a distinct coefficient.
Tensor project(const Tensor& x, const Tensor& weights) { return ops::sum(ops::mul(x, weights)); }

std::vector<std::uint8_t> random_mask(Rng& rng, std::size_t batch, std::size_t seq) {
  std::vector<std::uint8_t> mask(batch * seq, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t len = pick(rng, 1, seq);
    for (std::size_t t = 0; t < len; ++t) mask[b * seq + t] = 1;
  }
  return mask;
}

GradTrial op_trial(std::size_t kind, Rng& rng) {
  GradTrial t;
  auto& p = t.params;
  const std::size_t m = pick(rng, 2, 4), n = pick(rng, 2, 5), k = pick(rng, 2, 4);
  switch (kind) {
    case 0: {
      t.name = "matmul";
      p.add("a", random_tensor(rng, {m, k}, 1.0, true));
      p.add("b", random_tensor(rng, {k, n}, 1.0, true));
      auto w = random_tensor(rng, {m, n}, 1.0, false);
      t.loss = [w](ParameterStore& s) { return project(ops::matmul(s.get("a"), s.get("b")), w); };
      break;
    }
    case 1: {
      t.name = "add-mul-scale";
      p.add("a", random_tensor(rng, {m, n}, 1.0, true));
      p.add("b", random_tensor(rng, {m, n}, 1.0, true));
      p.add("c", random_tensor(rng, {m, n}, 1.0, true));
      t.loss = [](ParameterStore& s) {
        return ops::sum(ops::mul(ops::add(s.get("a"), s.get("b")), ops::scale(s.get("c"), 0.7)));
      };
      break;
    }
    case 2: {
      t.name = "add_rowwise-gelu";
      p.add("x", random_tensor(rng, {m, n}, 1.0, true));
      p.add("bias", random_tensor(rng, {n}, 1.0, true));
      auto w = random_tensor(rng, {m, n}, 1.0, false);
      t.loss = [w](ParameterStore& s) { return project(ops::gelu(ops::add_rowwise(s.get("x"), s.get("bias"))), w); };
      break;
    }
    case 3: {
      t.name = "softmax_rows";
      p.add("x", random_tensor(rng, {m, n}, 1.0, true));
      auto w = random_tensor(rng, {m, n}, 1.0, false);
      t.loss = [w](ParameterStore& s) { return project(ops::softmax_rows(s.get("x")), w); };
      break;
    }
    case 4: {
      t.name = "layer_norm";
      p.add("x", random_tensor(rng, {m, n}, 1.0, true));
      p.add("gamma", random_tensor(rng, {n}, 1.0, true));
      p.add("beta", random_tensor(rng, {n}, 1.0, true));
      auto w = random_tensor(rng, {m, n}, 1.0, false);
      t.loss = [w](ParameterStore& s) {
        return project(ops::layer_norm(s.get("x"), s.get("gamma"), s.get("beta")), w);
      };
      break;
    }
    case 5: {
      t.name = "cross_entropy";
      const std::size_t rows = pick(rng, 3, 6), classes = pick(rng, 2, 4);
      p.add("logits", random_tensor(rng, {rows, classes}, 1.0, true));
      std::vector<int> targets(rows);
      std::vector<std::uint8_t> mask(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        targets[i] = static_cast<int>(pick(rng, 0, classes - 1));
        mask[i] = i == 0 ? 1 : static_cast<std::uint8_t>(pick(rng, 0, 1));
      }
      t.loss = [targets, mask](ParameterStore& s) { return ops::cross_entropy(s.get("logits"), targets, mask); };
      break;
    }
    case 6: {
      t.name = "gather_rows";
      const std::size_t rows = pick(rng, 3, 6), count = pick(rng, 3, 8);
      p.add("table", random_tensor(rng, {rows, n}, 1.0, true));
      std::vector<std::size_t> idx(count);
      for (auto& i : idx) i = pick(rng, 0, rows - 1);
      auto w = random_tensor(rng, {count, n}, 1.0, false);
      t.loss = [idx, w](ParameterStore& s) { return project(ops::gather_rows(s.get("table"), idx), w); };
      break;
    }
    case 7: {
      t.name = "masked_mean_pool";
      const std::size_t batch = pick(rng, 1, 3), seq = pick(rng, 2, 4);
      p.add("x", random_tensor(rng, {batch * seq, n}, 1.0, true));
      auto mask = random_mask(rng, batch, seq);
      auto w = random_tensor(rng, {batch, n}, 1.0, false);
      t.loss = [mask, w, batch, seq](ParameterStore& s) {
        return project(ops::masked_mean_pool(s.get("x"), mask, batch, seq), w);
      };
      break;
    }
    case 8: {
      t.name = "attention";
      const std::size_t batch = pick(rng, 1, 2), seq = pick(rng, 2, 4), heads = pick(rng, 1, 2);
      const std::size_t d = heads * pick(rng, 1, 3);
      p.add("q", random_tensor(rng, {batch * seq, d}, 1.0, true));
      p.add("k", random_tensor(rng, {batch * seq, d}, 1.0, true));
      p.add("v", random_tensor(rng, {batch * seq, d}, 1.0, true));
      auto mask = random_mask(rng, batch, seq);
      auto w = random_tensor(rng, {batch * seq, d}, 1.0, false);
      t.loss = [mask, w, batch, seq, heads](ParameterStore& s) {
        return project(ops::attention(s.get("q"), s.get("k"), s.get("v"), mask, batch, seq, heads), w);
      };
      break;
    }
    case 9: {
      t.name = "dropout";
      p.add("x", random_tensor(rng, {m, n}, 1.0, true));
      auto w = random_tensor(rng, {m, n}, 1.0, false);
      const std::uint64_t mask_seed = rng();
      t.loss = [w, mask_seed](ParameterStore& s) {
        Rng local(mask_seed);  // same mask on every evaluation
        return project(ops::dropout(s.get("x"), 0.3, local), w);
      };
      break;
    }
    default: {
      t.name = "linear-cross_entropy";
      const std::size_t rows = pick(rng, 3, 6);
      p.add("x", random_tensor(rng, {rows, n}, 1.0, true));
      p.add("w", random_tensor(rng, {n, 2}, 1.0, true));
      p.add("b", random_tensor(rng, {2}, 1.0, true));
      std::vector<int> targets(rows);
      for (auto& y : targets) y = static_cast<int>(pick(rng, 0, 1));
      std::vector<std::uint8_t> mask(rows, 1);
      t.loss = [targets, mask](ParameterStore& s) {
        return ops::cross_entropy(ops::linear(s.get("x"), s.get("w"), s.get("b")), targets, mask);
      };
      break;
    }
  }
  return t;
}

// Full encoder + heads with every label pattern present, including masked
// (absent) auxiliary labels.
GradTrial model_trial(std::size_t variant, Rng& rng) {
  encoder::EncoderConfig cfg;
  cfg.vocab_size = pick(rng, 6, 10);
  cfg.n_heads = pick(rng, 1, 2);
  cfg.d_model = cfg.n_heads * pick(rng, 4, 5);
  cfg.d_ff = pick(rng, 3, 6);
  cfg.n_layers = pick(rng, 1, 2);
  cfg.max_len = 6;
  cfg.init_std = 0.5;
  cfg.pooling = variant == 1 ? encoder::Pooling::Mean : encoder::Pooling::FirstToken;
  cfg.dropout = variant == 3 ? 0.2 : 0.0;
  const model::HeadSet set = variant == 0 || variant == 3 ? model::HeadSet::HardSix : model::HeadSet::HardTwo;

  auto built = model::build_model(cfg, set, rng());
  // Non-trivial norm parameters so their gradients are exercised away from
  // the identity.
  for (auto& e : built.params.entries()) {
    std::normal_distribution<double> jitter(0.0, 0.3);
    for (double& v : e.tensor.mutable_data()) v += jitter(rng);
  }
  if (variant == 1) {
    std::uniform_real_distribution<double> u(0.2, 1.5);
    for (auto& h : built.heads) h.weight = h.task == TaskId::Hard ? 1.0 : u(rng);
  }

  const std::size_t batch = pick(rng, 2, 3), seq = pick(rng, 3, 5);
  std::vector<std::vector<std::uint32_t>> seqs(batch);
  for (auto& s : seqs) {
    const std::size_t len = pick(rng, 2, seq);
    s.push_back(1);
    for (std::size_t i = 1; i < len; ++i) s.push_back(static_cast<std::uint32_t>(pick(rng, 2, cfg.vocab_size - 1)));
  }
  auto tokens = encoder::TokenBatch::from_sequences(seqs);

  std::vector<TaskLabelSet> labels(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    auto coin = [&] { return static_cast<int>(pick(rng, 0, 1)); };
    auto maybe = [&]() -> MaybeLabel { return pick(rng, 0, 3) == 0 ? MaybeLabel{} : MaybeLabel{coin()}; };
    labels[b].hard = coin();
    for (auto& s : labels[b].profiles) s = maybe();
    labels[b].f_agg = maybe();
    labels[b].m_agg = maybe();
  }

  GradTrial t;
  t.name = variant == 0   ? "encoder+six-heads"
           : variant == 1 ? "encoder-mean-pool+two-heads-weighted"
           : variant == 2 ? "encoder+two-heads"
                          : "encoder-dropout+six-heads";
  t.params = built.params;
  const auto heads = built.heads;
  const std::uint64_t drop_seed = rng();
  t.loss = [cfg, heads, tokens, labels, drop_seed](ParameterStore& s) {
    const model::MultitaskModel view{cfg, heads, s};
    Rng local(drop_seed);
    encoder::ForwardOptions opts{cfg.dropout > 0.0, &local};
    return model::multitask_loss(model::forward_logits(view, tokens, opts), labels, heads);
  };
  return t;
}

}  // namespace

GradTrial make_grad_trial(std::size_t index, std::uint64_t seed) {
  Rng rng(mix_seed(seed, index));
  const std::size_t kind = index % kGradTrialKinds;
  return kind <= 10 ? op_trial(kind, rng) : model_trial(kind - 11, rng);
}

std::vector<GradTrialResult> run_gradcheck_suite(std::size_t trials, std::uint64_t seed, double h, double rtol,
                                                 double floor) {
  std::vector<GradTrialResult> out;
  for (std::size_t i = 0; i < trials; ++i) {
    GradTrial t = make_grad_trial(i, seed);
    out.push_back({t.name, finite_diff_gradcheck(t.loss, t.params, h, rtol, floor)});
  }
  return out;
}

}  // namespace mtl::train
