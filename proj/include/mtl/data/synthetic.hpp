#pragma once

// Synthetic multi-annotator corpus: each record has a latent label carried by
// planted cue tokens amid filler words, and each of the six annotator
// profiles reports the latent label flipped with its own probability.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mtl/data/annotations.hpp"

namespace mtl::data {

struct SyntheticThemes {
  std::size_t filler_words = 300;
  std::size_t cue_words = 20;        // per class
  std::size_t min_tokens = 6;        // filler tokens per text
  std::size_t max_tokens = 14;
  std::size_t cues_per_text = 2;
  double cue_fidelity = 1.0;         // chance a cue comes from the latent class
  double positive_rate = 0.5;
};

struct SyntheticSpec {
  std::size_t n = 1000;
  std::array<double, 6> flip{};      // kProfileTasks order
  std::uint64_t seed = 0;
  SyntheticThemes themes;
  std::string id_prefix = "s";
};

struct SyntheticRecord {
  AnnotationRecord record;
  int latent = 0;
};

// Throws ConfigError for n == 0, flip probabilities outside [0, 0.5) or an
// inconsistent theme.
std::vector<SyntheticRecord> generate_synthetic(const SyntheticSpec& spec);

std::vector<AnnotationRecord> records_of(const std::vector<SyntheticRecord>& synthetic);

}  // namespace mtl::data
