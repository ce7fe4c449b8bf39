#include "sbelkit/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "sbelkit/io.hpp"
#include "sbelkit/text.hpp"

namespace sbelkit::vocab {
namespace {

constexpr std::string_view kMagic = "#sbelkit-vocab 1";

bool is_reserved(std::string_view t) {
  return t == kPad || t == kUnk || t == kCls || t == kF1 || t == kF2;
}

}  // namespace

void Vocabulary::index() {
  ids_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    ids_.emplace(tokens_[i], static_cast<TokenId>(i));
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  v.tokens_ = {std::string(kPad), std::string(kUnk), std::string(kCls), std::string(kF1),
               std::string(kF2), std::string(kSubjectMarker), std::string(kObjectMarker)};
  v.index();
  for (const std::string& t : tokens) {
    if (t.empty() || is_reserved(t) || v.ids_.count(t)) continue;
    v.ids_.emplace(t, static_cast<TokenId>(v.tokens_.size()));
    v.tokens_.push_back(t);
  }
  return v;
}

Vocabulary Vocabulary::parse(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw DataError("vocabulary file must start with '" + std::string(kMagic) + "'");
  std::map<std::string, long> reserved;
  bool closed = false;
  while (std::getline(in, line)) {
    if (line == "#end") {
      closed = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag, name;
    long id = -1;
    if (!(ls >> tag >> name >> id) || tag != "#reserved")
      throw DataError("bad vocabulary header line: " + line);
    reserved[name] = id;
  }
  if (!closed) throw DataError("vocabulary header is missing '#end'");
  Vocabulary v;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.tokens_.push_back(line);
  }
  auto slot = [&](const char* name, std::string_view expected) -> TokenId {
    auto it = reserved.find(name);
    if (it == reserved.end()) throw DataError(std::string("vocabulary header lacks reserved ") + name);
    if (it->second < 0 || static_cast<std::size_t>(it->second) >= v.tokens_.size())
      throw DataError(std::string("reserved ") + name + " id out of range");
    if (v.tokens_[static_cast<std::size_t>(it->second)] != expected)
      throw DataError(std::string("reserved ") + name + " id " + std::to_string(it->second) +
                      " holds '" + v.tokens_[static_cast<std::size_t>(it->second)] + "', expected '" +
                      std::string(expected) + "'");
    return static_cast<TokenId>(it->second);
  };
  v.pad_ = slot("PAD", kPad);
  v.unk_ = slot("UNK", kUnk);
  v.cls_ = slot("CLS", kCls);
  v.f1_ = slot("F1", kF1);
  v.f2_ = slot("F2", kF2);
  v.index();
  if (v.ids_.size() != v.tokens_.size()) throw DataError("vocabulary has duplicate tokens");
  for (std::string_view m : {kSubjectMarker, kObjectMarker})
    if (!v.contains(m)) throw DataError("vocabulary lacks marker token '" + std::string(m) + "'");
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::string Vocabulary::serialize() const {
  std::string out(kMagic);
  out += "\n#reserved PAD " + std::to_string(pad_);
  out += "\n#reserved UNK " + std::to_string(unk_);
  out += "\n#reserved CLS " + std::to_string(cls_);
  out += "\n#reserved F1 " + std::to_string(f1_);
  out += "\n#reserved F2 " + std::to_string(f2_);
  out += "\n#end\n";
  for (const std::string& t : tokens_) out += t + "\n";
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const { io::write_file_atomic(path, serialize()); }

bool Vocabulary::contains(std::string_view token) const {
  return ids_.find(std::string(token)) != ids_.end();
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_ : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  return tokens_.at(static_cast<std::size_t>(id));
}

std::vector<std::string> basic_tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    }
  }
  flush();
  return out;
}

std::vector<std::string> wordpiece(std::string_view word, const Vocabulary& vocab, std::size_t max_chars) {
  const std::vector<std::size_t> offs = text::codepoint_offsets(word);
  const std::size_t n = offs.size() - 1;
  if (n > max_chars) return {std::string(kUnk)};
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = n;
    std::string found;
    while (end > start) {
      std::string piece(word.substr(offs[start], offs[end] - offs[start]));
      if (start > 0) piece = "##" + piece;
      if (vocab.contains(piece)) {
        found = std::move(piece);
        break;
      }
      --end;
    }
    if (found.empty()) return {std::string(kUnk)};
    pieces.push_back(std::move(found));
    start = end;
  }
  return pieces;
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> basic = basic_tokenize(text);
  if (!wp_) return basic;
  std::vector<std::string> out;
  for (const std::string& w : basic) {
    std::vector<std::string> pieces = wordpiece(w, *wp_);
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

Vocabulary build_vocabulary(const corpus::Corpus& corpus, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const corpus::AnnotatedSentence& s : corpus)
    for (std::string& t : basic_tokenize(s.text)) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (auto& [t, c] : ranked)
    if (c >= min_count) tokens.push_back(t);
  return Vocabulary::from_tokens(tokens);
}

}  // namespace sbelkit::vocab
