#pragma once

// Parser and printer for the causal subset of BEL:
//
//   statement  := term REL term
//   REL        := increases | decreases | directlyIncreases | directlyDecreases
//   term       := wrapper "(" term ("," term)* ")" | abundance
//   abundance  := KIND "(" NS ":" NAME ("," "pmod" "(" MODCODE ")")? ")"
//   KIND       := p | g | r | a | bp | path
//
// Wrappers other than act/deg/sec/tloc/complex are kept verbatim so that
// generalization (kin -> act, ...) happens in one place, the SBEL converter.
// `complex(NS:NAME)` is accepted as a named-complex abundance.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sbelkit/error.hpp"

namespace sbelkit::bel {

class SyntaxError : public DataError {
 public:
  SyntaxError(std::size_t position, const std::string& what)
      : DataError("BEL syntax error at " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UnknownFunction : public DataError {
 public:
  explicit UnknownFunction(std::string keyword)
      : DataError("unknown BEL function '" + keyword + "'"), keyword_(std::move(keyword)) {}
  const std::string& keyword() const noexcept { return keyword_; }

 private:
  std::string keyword_;
};

// Abundance keywords. `complex_entity` is a named complex, e.g. complex(SCOMP:X).
enum class AbundanceKind { p, g, r, a, bp, path, complex_entity };

std::string_view to_string(AbundanceKind k);
std::optional<AbundanceKind> abundance_kind_from(std::string_view keyword);

struct Abundance {
  AbundanceKind kind = AbundanceKind::p;
  std::string ns;
  std::string name;
  // Modification code of an inner pmod(...), e.g. "P".
  std::optional<std::string> pmod;

  bool operator==(const Abundance&) const = default;
};

struct BelTerm;

struct WrappedTerm {
  std::string wrapper;
  std::vector<BelTerm> members;

  bool operator==(const WrappedTerm&) const;
};

struct BelTerm {
  std::variant<Abundance, WrappedTerm> node;

  bool is_abundance() const { return std::holds_alternative<Abundance>(node); }
  const Abundance& abundance() const { return std::get<Abundance>(node); }
  const WrappedTerm& wrapped() const { return std::get<WrappedTerm>(node); }

  bool operator==(const BelTerm&) const = default;
};

inline bool WrappedTerm::operator==(const WrappedTerm& o) const {
  return wrapper == o.wrapper && members == o.members;
}

struct BelStatement {
  BelTerm subject;
  std::string relation;
  BelTerm object;
  std::optional<std::string> stmt_id;

  // Statement identity ignores stmt_id.
  bool operator==(const BelStatement& o) const {
    return subject == o.subject && relation == o.relation && object == o.object;
  }
};

// Surface relation keywords accepted by the grammar.
bool is_relation_keyword(std::string_view word);
// act, deg, sec, tloc, complex.
bool is_recognized_wrapper(std::string_view word);

BelStatement parse_bel(std::string_view text);
BelTerm parse_term(std::string_view text);

std::string serialize(const BelTerm& term);
std::string serialize_bel(const BelStatement& stmt);

struct CanonOptions {
  bool upper_namespace = false;
  bool upper_name = false;
};

// Idempotent. Sorts complex members by their serialized form and applies
// the optional case folding.
BelTerm canonicalize(const BelTerm& term, const CanonOptions& opts = {});
BelStatement canonicalize_bel(const BelStatement& stmt, const CanonOptions& opts = {});

// Serialized form of an abundance, quoting names outside [A-Za-z0-9_-]+.
std::string serialize_abundance(const Abundance& a);

}  // namespace sbelkit::bel
