#include "sbelkit/bel.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace sbelkit::bel {
namespace {

constexpr std::array<std::string_view, 4> kRelations = {"increases", "decreases",
                                                        "directlyIncreases", "directlyDecreases"};
constexpr std::array<std::string_view, 5> kWrappers = {"act", "deg", "sec", "tloc", "complex"};

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

bool is_plain_ident(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), ident_char);
}

enum class Tok { Ident, Quoted, LParen, RParen, Comma, Colon, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { tokenize(); }
  const std::vector<Token>& tokens() const { return toks_; }

 private:
  void tokenize() {
    std::size_t i = 0;
    while (i < src_.size()) {
      char c = src_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '(') {
        toks_.push_back({Tok::LParen, "(", i++});
      } else if (c == ')') {
        toks_.push_back({Tok::RParen, ")", i++});
      } else if (c == ',') {
        toks_.push_back({Tok::Comma, ",", i++});
      } else if (c == ':') {
        toks_.push_back({Tok::Colon, ":", i++});
      } else if (c == '"') {
        std::size_t start = i++;
        while (i < src_.size() && src_[i] != '"') ++i;
        if (i >= src_.size()) throw SyntaxError(start, "unterminated quoted name");
        toks_.push_back({Tok::Quoted, std::string(src_.substr(start + 1, i - start - 1)), start});
        ++i;
      } else if (ident_char(c)) {
        std::size_t start = i;
        while (i < src_.size() && ident_char(src_[i])) ++i;
        toks_.push_back({Tok::Ident, std::string(src_.substr(start, i - start)), start});
      } else {
        throw SyntaxError(i, std::string("unexpected character '") + c + "'");
      }
    }
    toks_.push_back({Tok::End, "", src_.size()});
  }

  std::string_view src_;
  std::vector<Token> toks_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), toks_(Lexer(src).tokens()) {}

  BelStatement statement() {
    BelStatement st;
    st.subject = term();
    const Token& rel = peek();
    if (rel.kind != Tok::Ident)
      throw SyntaxError(clamp(rel.pos), "expected relation keyword");
    if (!is_relation_keyword(rel.text))
      throw SyntaxError(rel.pos, "unknown relation '" + rel.text + "'");
    st.relation = rel.text;
    ++at_;
    st.object = term();
    expect_end();
    return st;
  }

  BelTerm lone_term() {
    BelTerm t = term();
    expect_end();
    return t;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(at_ + ahead, toks_.size() - 1)];
  }

  // Error positions must point inside the input, including for
  // "unexpected end" errors.
  std::size_t clamp(std::size_t pos) const {
    return src_.empty() ? 0 : std::min(pos, src_.size() - 1);
  }

  const Token& expect(Tok kind, std::string_view what) {
    const Token& t = peek();
    if (t.kind != kind) {
      std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
      throw SyntaxError(clamp(t.pos), "expected " + std::string(what) + ", got " + got);
    }
    ++at_;
    return t;
  }

  void expect_end() {
    const Token& t = peek();
    if (t.kind != Tok::End) throw SyntaxError(t.pos, "trailing input '" + t.text + "'");
  }

  BelTerm term() {
    const Token& kw = expect(Tok::Ident, "function keyword");
    const std::string keyword = kw.text;
    expect(Tok::LParen, "'('");
    // NS ':' starts an abundance argument list.
    if (peek().kind == Tok::Ident && peek(1).kind == Tok::Colon) {
      std::optional<AbundanceKind> kind = abundance_kind_from(keyword);
      if (!kind) throw UnknownFunction(keyword);
      return BelTerm{abundance(*kind)};
    }
    WrappedTerm w;
    w.wrapper = keyword;
    w.members.push_back(term());
    while (peek().kind == Tok::Comma) {
      ++at_;
      w.members.push_back(term());
    }
    expect(Tok::RParen, "')'");
    if (w.wrapper == "complex" && w.members.size() < 2)
      throw SyntaxError(kw.pos, "complex needs at least two members");
    if (w.wrapper != "complex" && w.members.size() != 1)
      throw SyntaxError(kw.pos, "'" + w.wrapper + "' takes exactly one term");
    return BelTerm{std::move(w)};
  }

  Abundance abundance(AbundanceKind kind) {
    Abundance a;
    a.kind = kind;
    a.ns = expect(Tok::Ident, "namespace").text;
    expect(Tok::Colon, "':'");
    const Token& name = peek();
    if (name.kind != Tok::Ident && name.kind != Tok::Quoted)
      throw SyntaxError(clamp(name.pos), "expected name");
    if (name.text.empty()) throw SyntaxError(name.pos, "empty name");
    a.name = name.text;
    ++at_;
    if (peek().kind == Tok::Comma) {
      ++at_;
      const Token& mod = expect(Tok::Ident, "'pmod'");
      if (mod.text != "pmod") throw SyntaxError(mod.pos, "expected 'pmod', got '" + mod.text + "'");
      if (kind == AbundanceKind::complex_entity)
        throw SyntaxError(mod.pos, "pmod is not allowed on a named complex");
      expect(Tok::LParen, "'('");
      a.pmod = expect(Tok::Ident, "modification code").text;
      expect(Tok::RParen, "')'");
    }
    expect(Tok::RParen, "')'");
    return a;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t at_ = 0;
};

std::string quote_if_needed(const std::string& s) {
  return is_plain_ident(s) ? s : "\"" + s + "\"";
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string_view to_string(AbundanceKind k) {
  switch (k) {
    case AbundanceKind::p: return "p";
    case AbundanceKind::g: return "g";
    case AbundanceKind::r: return "r";
    case AbundanceKind::a: return "a";
    case AbundanceKind::bp: return "bp";
    case AbundanceKind::path: return "path";
    case AbundanceKind::complex_entity: return "complex";
  }
  return "?";
}

std::optional<AbundanceKind> abundance_kind_from(std::string_view kw) {
  if (kw == "p") return AbundanceKind::p;
  if (kw == "g") return AbundanceKind::g;
  if (kw == "r") return AbundanceKind::r;
  if (kw == "a") return AbundanceKind::a;
  if (kw == "bp") return AbundanceKind::bp;
  if (kw == "path") return AbundanceKind::path;
  if (kw == "complex") return AbundanceKind::complex_entity;
  return std::nullopt;
}

bool is_relation_keyword(std::string_view word) {
  return std::find(kRelations.begin(), kRelations.end(), word) != kRelations.end();
}

bool is_recognized_wrapper(std::string_view word) {
  return std::find(kWrappers.begin(), kWrappers.end(), word) != kWrappers.end();
}

BelStatement parse_bel(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw SyntaxError(0, "empty statement");
  return Parser(text).statement();
}

BelTerm parse_term(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw SyntaxError(0, "empty term");
  return Parser(text).lone_term();
}

std::string serialize_abundance(const Abundance& a) {
  std::string out(to_string(a.kind));
  out += '(';
  out += quote_if_needed(a.ns);
  out += ':';
  out += quote_if_needed(a.name);
  if (a.pmod) out += ",pmod(" + *a.pmod + ")";
  out += ')';
  return out;
}

std::string serialize(const BelTerm& term) {
  if (term.is_abundance()) return serialize_abundance(term.abundance());
  const WrappedTerm& w = term.wrapped();
  std::string out = w.wrapper + "(";
  for (std::size_t i = 0; i < w.members.size(); ++i) {
    if (i) out += ',';
    out += serialize(w.members[i]);
  }
  out += ')';
  return out;
}

std::string serialize_bel(const BelStatement& stmt) {
  return serialize(stmt.subject) + " " + stmt.relation + " " + serialize(stmt.object);
}

BelTerm canonicalize(const BelTerm& term, const CanonOptions& opts) {
  if (term.is_abundance()) {
    Abundance a = term.abundance();
    if (opts.upper_namespace) a.ns = upper(a.ns);
    if (opts.upper_name) a.name = upper(a.name);
    return BelTerm{std::move(a)};
  }
  WrappedTerm w;
  w.wrapper = term.wrapped().wrapper;
  for (const BelTerm& m : term.wrapped().members) w.members.push_back(canonicalize(m, opts));
  if (w.wrapper == "complex") {
    std::vector<std::pair<std::string, BelTerm>> keyed;
    for (BelTerm& m : w.members) keyed.emplace_back(serialize(m), std::move(m));
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    w.members.clear();
    for (auto& [_, m] : keyed) w.members.push_back(std::move(m));
  }
  return BelTerm{std::move(w)};
}

BelStatement canonicalize_bel(const BelStatement& stmt, const CanonOptions& opts) {
  BelStatement out;
  out.subject = canonicalize(stmt.subject, opts);
  out.relation = stmt.relation;
  out.object = canonicalize(stmt.object, opts);
  out.stmt_id = stmt.stmt_id;
  return out;
}

}  // namespace sbelkit::bel
