#include "mtl/encoder/encoder.hpp"

#include <algorithm>

#include "mtl/error.hpp"
#include "mtl/numerics/ops.hpp"

namespace mtl::encoder {
namespace {

std::string layer_name(std::size_t layer, std::string_view leaf) {
  return std::string(kPrefix) + "layer" + std::to_string(layer) + "." + std::string(leaf);
}

enum class Init { Normal, Zero, One };

struct Slot {
  std::string name;
  Shape shape;
  Init init;
};

std::vector<Slot> slots(const EncoderConfig& c) {
  const std::string p(kPrefix);
  std::vector<Slot> out{
      {p + "tok_emb", {c.vocab_size, c.d_model}, Init::Normal},
      {p + "pos_emb", {c.max_len, c.d_model}, Init::Normal},
  };
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    out.push_back({layer_name(l, "ln1.gamma"), {c.d_model}, Init::One});
    out.push_back({layer_name(l, "ln1.beta"), {c.d_model}, Init::Zero});
    for (const char* proj : {"q", "k", "v", "o"}) {
      out.push_back({layer_name(l, std::string("attn.w") + proj), {c.d_model, c.d_model}, Init::Normal});
      out.push_back({layer_name(l, std::string("attn.b") + proj), {c.d_model}, Init::Zero});
    }
    out.push_back({layer_name(l, "ln2.gamma"), {c.d_model}, Init::One});
    out.push_back({layer_name(l, "ln2.beta"), {c.d_model}, Init::Zero});
    out.push_back({layer_name(l, "ffn.w1"), {c.d_model, c.d_ff}, Init::Normal});
    out.push_back({layer_name(l, "ffn.b1"), {c.d_ff}, Init::Zero});
    out.push_back({layer_name(l, "ffn.w2"), {c.d_ff, c.d_model}, Init::Normal});
    out.push_back({layer_name(l, "ffn.b2"), {c.d_model}, Init::Zero});
  }
  out.push_back({p + "ln_f.gamma", {c.d_model}, Init::One});
  out.push_back({p + "ln_f.beta", {c.d_model}, Init::Zero});
  return out;
}

}  // namespace

std::string_view pooling_name(Pooling pooling) {
  return pooling == Pooling::FirstToken ? "first-token" : "mean";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "first-token") return Pooling::FirstToken;
  if (name == "mean") return Pooling::Mean;
  throw ConfigError("unknown pooling '" + std::string(name) + "' (expected first-token or mean)");
}

void EncoderConfig::validate() const {
  if (!vocab_size || !d_model || !n_layers || !n_heads || !d_ff || !max_len) {
    throw ConfigError("encoder config: all extents must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("encoder config: d_model " + std::to_string(d_model) +
                      " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (d_model < 2) throw ConfigError("encoder config: d_model must be at least 2");
  if (max_len < 2) throw ConfigError("encoder config: max_len must be at least 2");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("encoder config: dropout must be in [0, 1)");
  if (!(init_std > 0.0)) throw ConfigError("encoder config: init_std must be positive");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("encoder config: layer_norm_eps must be positive");
}

EncoderPreset preset(std::string_view name) {
  if (name == "base-sim") return EncoderPreset{"base-sim", EncoderConfig{}, 0, true};
  // Keeps case, as tweet text carries signal in capitalization.
  if (name == "tweet-sim") return EncoderPreset{"tweet-sim", EncoderConfig{}, 0x7477656574ULL, false};
  throw ConfigError("unknown encoder preset '" + std::string(name) + "' (expected base-sim or tweet-sim)");
}

std::vector<std::string> preset_names() { return {"base-sim", "tweet-sim"}; }

TokenBatch TokenBatch::from_sequences(const std::vector<std::vector<std::uint32_t>>& sequences,
                                      std::uint32_t pad_id) {
  TokenBatch out;
  out.batch = sequences.size();
  for (const auto& s : sequences) out.seq = std::max(out.seq, s.size());
  out.ids.assign(out.batch * out.seq, pad_id);
  out.mask.assign(out.batch * out.seq, 0);
  for (std::size_t b = 0; b < out.batch; ++b) {
    std::copy(sequences[b].begin(), sequences[b].end(), out.ids.begin() + b * out.seq);
    std::fill_n(out.mask.begin() + b * out.seq, sequences[b].size(), 1);
  }
  return out;
}

std::vector<std::pair<std::string, Shape>> parameter_layout(const EncoderConfig& config) {
  std::vector<std::pair<std::string, Shape>> out;
  for (auto& s : slots(config)) out.emplace_back(std::move(s.name), std::move(s.shape));
  return out;
}

void init_encoder(const EncoderConfig& config, std::uint64_t seed, ParameterStore& store) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  for (auto& s : slots(config)) {
    std::vector<double> values(shape_numel(s.shape), s.init == Init::One ? 1.0 : 0.0);
    if (s.init == Init::Normal) {
      for (double& v : values) v = normal(rng);
    }
    store.add(std::move(s.name), Tensor(std::move(s.shape), std::move(values)));
  }
}

ParameterStore init_encoder(const EncoderConfig& config, std::uint64_t seed) {
  ParameterStore store;
  init_encoder(config, seed, store);
  return store;
}

Tensor encode_forward(const ParameterStore& params, const EncoderConfig& config,
                      const TokenBatch& batch, const ForwardOptions& options) {
  const std::size_t B = batch.batch, T = batch.seq;
  if (B == 0 || T == 0) throw DimensionError("encode_forward: empty batch");
  if (batch.ids.size() != B * T || batch.mask.size() != B * T) {
    throw DimensionError("encode_forward: token batch buffers do not match " + std::to_string(B) +
                         " x " + std::to_string(T));
  }
  if (T > config.max_len) {
    throw DimensionError("encode_forward: sequence length " + std::to_string(T) + " exceeds max_len " +
                         std::to_string(config.max_len));
  }
  const bool use_dropout = options.training && config.dropout > 0.0;
  if (use_dropout && options.rng == nullptr) {
    throw StateError("encode_forward: dropout requires a seeded generator");
  }
  auto maybe_dropout = [&](const Tensor& x) { return use_dropout ? ops::dropout(x, config.dropout, *options.rng) : x; };
  const std::string p(kPrefix);

  std::vector<std::size_t> token_rows(B * T);
  for (std::size_t i = 0; i < token_rows.size(); ++i) {
    if (batch.ids[i] >= config.vocab_size) {
      throw VocabError("encode_forward: token id " + std::to_string(batch.ids[i]) +
                       " outside vocabulary of " + std::to_string(config.vocab_size));
    }
    token_rows[i] = batch.ids[i];
  }
  Tensor x = ops::gather_rows(params.get(p + "tok_emb"), token_rows);
  if (config.use_positional) {
    std::vector<std::size_t> positions(B * T);
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % T;
    x = ops::add(x, ops::gather_rows(params.get(p + "pos_emb"), positions));
  }
  x = maybe_dropout(x);

  const double eps = config.layer_norm_eps;
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    auto w = [&](std::string_view leaf) -> const Tensor& { return params.get(layer_name(l, leaf)); };
    Tensor h = ops::layer_norm(x, w("ln1.gamma"), w("ln1.beta"), eps);
    Tensor q = ops::linear(h, w("attn.wq"), w("attn.bq"));
    Tensor k = ops::linear(h, w("attn.wk"), w("attn.bk"));
    Tensor v = ops::linear(h, w("attn.wv"), w("attn.bv"));
    Tensor a = ops::attention(q, k, v, batch.mask, B, T, config.n_heads);
    x = ops::add(x, maybe_dropout(ops::linear(a, w("attn.wo"), w("attn.bo"))));
    Tensor h2 = ops::layer_norm(x, w("ln2.gamma"), w("ln2.beta"), eps);
    Tensor f = ops::linear(ops::gelu(ops::linear(h2, w("ffn.w1"), w("ffn.b1"))), w("ffn.w2"), w("ffn.b2"));
    x = ops::add(x, maybe_dropout(f));
  }
  x = ops::layer_norm(x, params.get(p + "ln_f.gamma"), params.get(p + "ln_f.beta"), eps);

  if (config.pooling == Pooling::Mean) return ops::masked_mean_pool(x, batch.mask, B, T);
  std::vector<std::size_t> first(B);
  for (std::size_t b = 0; b < B; ++b) first[b] = b * T;
  return ops::gather_rows(x, first);
}

void set_trainable(ParameterStore& params, bool trainable) {
  params.set_trainable_prefix(kPrefix, trainable);
}

}  // namespace mtl::encoder
