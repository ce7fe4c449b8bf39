#pragma once

// Token vocabulary and tokenizers.
//
// Vocabulary file: a header block, then one token per line (line index after
// the header = id).
//
//   #sbelkit-vocab 1
//   #reserved PAD 0
//   #reserved UNK 1
//   #reserved CLS 2
//   #reserved F1 3
//   #reserved F2 4
//   #end
//   [PAD]
//   ...
//
// [F1] and [F2] live in the reserved BERT slots [unused1] and [unused2]. The
// basic tokenizer splits '[' and ']' off as punctuation, so text can never
// produce a reserved token.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sbelkit/corpus.hpp"

namespace sbelkit::vocab {

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kF1 = "[unused1]";
inline constexpr std::string_view kF2 = "[unused2]";
inline constexpr std::string_view kSubjectMarker = "@";
inline constexpr std::string_view kObjectMarker = "$";

using TokenId = std::int32_t;

class Vocabulary {
 public:
  // Reserved tokens at ids 0..4, then '@', '$', then `tokens` (duplicates
  // and reserved strings skipped) in the given order.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary parse(std::string_view content);

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  // [UNK] id when absent.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenId pad_id() const { return pad_; }
  TokenId unk_id() const { return unk_; }
  TokenId cls_id() const { return cls_; }
  TokenId f1_id() const { return f1_; }
  TokenId f2_id() const { return f2_; }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_ && pad_ == o.pad_ &&
                                                      unk_ == o.unk_ && cls_ == o.cls_ &&
                                                      f1_ == o.f1_ && f2_ == o.f2_; }

 private:
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  TokenId pad_ = 0, unk_ = 1, cls_ = 2, f1_ = 3, f2_ = 4;
};

// Lowercases ASCII, splits on whitespace, emits each ASCII punctuation
// character as its own token. Non-ASCII code points are word characters.
std::vector<std::string> basic_tokenize(std::string_view text);

// Greedy longest-match-first WordPiece over a vocabulary, continuation
// pieces prefixed with "##". Words with no segmentation become [UNK].
std::vector<std::string> wordpiece(std::string_view word, const Vocabulary& vocab,
                                   std::size_t max_chars = 100);

class Tokenizer {
 public:
  // When `wordpiece_vocab` is set, basic tokens are further split into
  // word pieces against it.
  explicit Tokenizer(const Vocabulary* wordpiece_vocab = nullptr) : wp_(wordpiece_vocab) {}
  std::vector<std::string> tokenize(std::string_view text) const;

 private:
  const Vocabulary* wp_;
};

// Vocabulary of every basic token occurring at least `min_count` times in
// the corpus texts, most frequent first, ties broken lexicographically.
Vocabulary build_vocabulary(const corpus::Corpus& corpus, std::size_t min_count = 1);

}  // namespace sbelkit::vocab
