#pragma once

// Binary checkpoint, little-endian:
//   "MTLC" | u32 version (1) | u64 len + config JSON | u64 parameter count |
//   per parameter: u64 len + name, u8 rank, u64 dims[rank], f64 payload |
//   u64 len + metadata JSON
// The config JSON must carry "encoder" and "heads" so shapes can be checked
// while loading.

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mtl/model/model.hpp"
#include "mtl/numerics/parameter_store.hpp"

namespace mtl::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::ordered_json config;
  ParameterStore params;
  nlohmann::ordered_json metadata;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
// Throws CheckpointError (NotACheckpoint, VersionMismatch, Truncated,
// ShapeMismatch, Corrupt).
Checkpoint deserialize_checkpoint(std::string_view bytes);

// Written to a temporary sibling, then renamed over `path`.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::ordered_json encoder_config_to_json(const encoder::EncoderConfig& config);
encoder::EncoderConfig encoder_config_from_json(const nlohmann::ordered_json& j,
                                                encoder::EncoderConfig base = {});

// `config` is extended with the model's "encoder" and "heads" entries.
Checkpoint make_checkpoint(const model::MultitaskModel& model, nlohmann::ordered_json config,
                           nlohmann::ordered_json metadata);
model::MultitaskModel model_from_checkpoint(const Checkpoint& checkpoint);

// Atomic text write (temp + rename).
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace mtl::train
