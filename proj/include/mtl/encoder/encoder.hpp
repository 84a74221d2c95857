#pragma once

// Desk-scale pre-norm transformer encoder producing one pooled vector per
// sequence. Parameters live in a ParameterStore under `encoder.*`.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mtl/numerics/parameter_store.hpp"

namespace mtl::encoder {

enum class Pooling { FirstToken, Mean };

std::string_view pooling_name(Pooling pooling);
Pooling parse_pooling(std::string_view name);

struct EncoderConfig {
  std::size_t vocab_size = 8000;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_len = 64;
  double dropout = 0.0;
  Pooling pooling = Pooling::FirstToken;
  bool use_positional = true;
  double init_std = 0.02;
  double layer_norm_eps = 1e-5;

  // Throws ConfigError.
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

// The two named stand-ins. They share the architecture and differ in the
// seed salt mixed into initialization and in how the vocabulary is built.
struct EncoderPreset {
  std::string name;
  EncoderConfig config;
  std::uint64_t seed_salt = 0;
  bool case_fold = true;
};

EncoderPreset preset(std::string_view name);  // "base-sim" | "tweet-sim"
std::vector<std::string> preset_names();

inline constexpr std::string_view kPrefix = "encoder.";

// Padded batch of token ids, row-major [batch, seq]. mask is nonzero on real
// tokens; position 0 of each row is the sequence-start token.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<std::uint32_t> ids;
  std::vector<std::uint8_t> mask;

  static TokenBatch from_sequences(const std::vector<std::vector<std::uint32_t>>& sequences,
                                   std::uint32_t pad_id = 0);
};

// Adds all encoder parameters to `store`: weights ~ N(0, init_std), biases and
// layer-norm betas 0, layer-norm gammas 1. Deterministic in seed.
void init_encoder(const EncoderConfig& config, std::uint64_t seed, ParameterStore& store);
ParameterStore init_encoder(const EncoderConfig& config, std::uint64_t seed);

// Parameter names and shapes in insertion order, without values.
std::vector<std::pair<std::string, Shape>> parameter_layout(const EncoderConfig& config);

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training with dropout > 0
};

// [batch, d_model] pooled representations.
Tensor encode_forward(const ParameterStore& params, const EncoderConfig& config,
                      const TokenBatch& batch, const ForwardOptions& options = {});

// Freeze or unfreeze every encoder parameter.
void set_trainable(ParameterStore& params, bool trainable);

}  // namespace mtl::encoder
