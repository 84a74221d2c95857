#include "mtl/data/synthetic.hpp"

#include <cstdio>
#include <random>
#include <string>

#include "mtl/error.hpp"

namespace mtl::data {
namespace {

std::string word(const char* stem, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", stem, index);
  return buf;
}

}  // namespace

std::vector<SyntheticRecord> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n == 0) throw ConfigError("synthetic: n must be at least 1");
  for (double p : spec.flip) {
    if (!(p >= 0.0 && p < 0.5)) throw ConfigError("synthetic: flip probabilities must be in [0, 0.5)");
  }
  const SyntheticThemes& t = spec.themes;
  if (t.filler_words == 0 || t.cue_words == 0 || t.min_tokens > t.max_tokens) {
    throw ConfigError("synthetic: inconsistent vocabulary themes");
  }
  if (!(t.cue_fidelity >= 0.0 && t.cue_fidelity <= 1.0) || !(t.positive_rate >= 0.0 && t.positive_rate <= 1.0)) {
    throw ConfigError("synthetic: cue_fidelity and positive_rate must be probabilities");
  }

  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution positive(t.positive_rate);
  std::bernoulli_distribution faithful(t.cue_fidelity);
  std::uniform_int_distribution<std::size_t> length(t.min_tokens, t.max_tokens);
  std::uniform_int_distribution<std::size_t> filler(0, t.filler_words - 1);
  std::uniform_int_distribution<std::size_t> cue(0, t.cue_words - 1);
  std::array<std::bernoulli_distribution, 6> flips;
  for (std::size_t s = 0; s < 6; ++s) flips[s] = std::bernoulli_distribution(spec.flip[s]);

  std::vector<SyntheticRecord> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    SyntheticRecord r;
    r.latent = positive(rng) ? 1 : 0;
    std::vector<std::string> tokens(length(rng));
    for (auto& tok : tokens) tok = word("w", filler(rng));
    for (std::size_t c = 0; c < t.cues_per_text; ++c) {
      const int cls = faithful(rng) ? r.latent : 1 - r.latent;
      std::uniform_int_distribution<std::size_t> where(0, tokens.size());
      const std::size_t at = where(rng);
      tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(at), word(cls ? "cuea" : "cueb", cue(rng)));
    }
    std::string text;
    for (std::size_t k = 0; k < tokens.size(); ++k) text += (k ? " " : "") + tokens[k];

    char id[32];
    std::snprintf(id, sizeof id, "%06zu", i);
    r.record.id = spec.id_prefix + id;
    r.record.text = std::move(text);
    for (std::size_t s = 0; s < 6; ++s) {
      const Gender g = s < 3 ? Gender::Female : Gender::Male;
      const auto a = static_cast<AgeGroup>(s % 3);
      r.record.annotations.push_back(Annotation{g, a, flips[s](rng) ? 1 - r.latent : r.latent});
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AnnotationRecord> records_of(const std::vector<SyntheticRecord>& synthetic) {
  std::vector<AnnotationRecord> out;
  out.reserve(synthetic.size());
  for (const auto& s : synthetic) out.push_back(s.record);
  return out;
}

}  // namespace mtl::data
