#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mtl::data {

inline constexpr std::uint32_t kPadId = 0;
inline constexpr std::uint32_t kClsId = 1;
inline constexpr std::uint32_t kUnkId = 2;
inline constexpr std::size_t kReservedIds = 3;

// Splits on ASCII whitespace; optionally lower-cases ASCII letters.
std::vector<std::string> tokenize(std::string_view text, bool case_fold);

class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, bool case_fold);  // tokens[i] has id i + 3

  std::size_t size() const { return tokens_.size() + kReservedIds; }
  bool case_fold() const { return case_fold_; }
  std::uint32_t id(std::string_view token) const;  // UNK when unseen
  const std::string& token(std::uint32_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line; the first three lines are <pad>, <cls>, <unk>.
  std::string serialize() const;
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path, bool case_fold);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && case_fold_ == other.case_fold_;
  }

 private:
  std::vector<std::string> tokens_;
  bool case_fold_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Frequency-ranked (ties lexicographic) and capped at `cap` ids including the
// three reserved ones. Tokens spelled like a reserved literal are skipped.
Vocabulary build_vocab(const std::vector<std::string>& texts, std::size_t cap, bool case_fold);

struct EncodedText {
  std::vector<std::uint32_t> ids;   // exactly max_len, CLS first
  std::vector<std::uint8_t> mask;   // 1 on real tokens
};

EncodedText encode_text(const Vocabulary& vocab, std::string_view text, std::size_t max_len);

}  // namespace mtl::data
