#include "mtl/data/vocab.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>

#include "mtl/error.hpp"

namespace mtl::data {
namespace {

constexpr std::array<std::string_view, kReservedIds> kReservedLiterals{"<pad>", "<cls>", "<unk>"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_reserved_literal(std::string_view token) {
  return std::find(kReservedLiterals.begin(), kReservedLiterals.end(), token) != kReservedLiterals.end();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, bool case_fold) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      std::string tok(text.substr(i, j - i));
      if (case_fold) {
        for (char& c : tok) {
          if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
      }
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, bool case_fold)
    : tokens_(std::move(tokens)), case_fold_(case_fold) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (is_reserved_literal(tokens_[i])) throw VocabError("vocabulary token reuses a reserved literal: " + tokens_[i]);
    if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i + kReservedIds)).second) {
      throw VocabError("duplicate vocabulary token: " + tokens_[i]);
    }
  }
}

std::uint32_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(std::uint32_t id) const {
  static const std::array<std::string, kReservedIds> reserved{"<pad>", "<cls>", "<unk>"};
  if (id < kReservedIds) return reserved[id];
  if (id - kReservedIds >= tokens_.size()) throw VocabError("token id out of range: " + std::to_string(id));
  return tokens_[id - kReservedIds];
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (auto lit : kReservedLiterals) out.append(lit).push_back('\n');
  for (const auto& t : tokens_) out.append(t).push_back('\n');
  return out;
}

void Vocabulary::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write vocabulary: " + path);
    out << serialize();
    if (!out.flush()) throw DataError("failed writing vocabulary: " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot replace vocabulary " + path + ": " + ec.message());
}

Vocabulary Vocabulary::load(const std::string& path, bool case_fold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VocabError("cannot open vocabulary: " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (n < kReservedIds) {
      if (line != kReservedLiterals[n]) {
        throw VocabError("vocabulary line " + std::to_string(n + 1) + " must be " + std::string(kReservedLiterals[n]));
      }
    } else {
      tokens.push_back(line);
    }
    ++n;
  }
  if (n < kReservedIds) throw VocabError("vocabulary file is missing reserved entries: " + path);
  return Vocabulary(std::move(tokens), case_fold);
}

Vocabulary build_vocab(const std::vector<std::string>& texts, std::size_t cap, bool case_fold) {
  if (texts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  if (cap < kReservedIds) throw ConfigError("vocabulary cap must be at least " + std::to_string(kReservedIds));
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t, case_fold)) {
      if (!is_reserved_literal(tok)) ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // map order is lexicographic, so a stable sort by count keeps ties ordered.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), cap - kReservedIds);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(std::move(ranked[i].first));
  return Vocabulary(std::move(tokens), case_fold);
}

EncodedText encode_text(const Vocabulary& vocab, std::string_view text, std::size_t max_len) {
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  EncodedText out;
  out.ids.assign(max_len, kPadId);
  out.mask.assign(max_len, 0);
  out.ids[0] = kClsId;
  out.mask[0] = 1;
  std::size_t pos = 1;
  for (const auto& tok : tokenize(text, vocab.case_fold())) {
    if (pos == max_len) break;
    out.ids[pos] = vocab.id(tok);
    out.mask[pos] = 1;
    ++pos;
  }
  return out;
}

}  // namespace mtl::data
