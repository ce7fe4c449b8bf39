#pragma once

// SBEL: the five-tuple <func1, em1, relation, func2, em2> that sits between
// BEL statements and per-entity-pair learning instances. A BEL statement
// decomposes into one SBEL per (subject entity, object entity) pair; a set
// of predicted SBELs assembles back into BEL.

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbelkit/bel.hpp"

namespace sbelkit::sbel {

// Declaration order is the argmax tie-break order; None is last.
enum class FunctionType { act, deg, pmod, sec, tloc, complex, None };
enum class RelationType { increases, decreases, None };

inline constexpr std::size_t kNumFunctions = 7;
inline constexpr std::size_t kNumRelations = 3;

inline constexpr std::array<FunctionType, kNumFunctions> kAllFunctions = {
    FunctionType::act,  FunctionType::deg,     FunctionType::pmod, FunctionType::sec,
    FunctionType::tloc, FunctionType::complex, FunctionType::None};
inline constexpr std::array<RelationType, kNumRelations> kAllRelations = {
    RelationType::increases, RelationType::decreases, RelationType::None};

std::string_view to_string(FunctionType f);
std::string_view to_string(RelationType r);
// Accepts the names printed by to_string ("None" for the negative class).
std::optional<FunctionType> function_from(std::string_view s);
std::optional<RelationType> relation_from(std::string_view s);

inline std::size_t index(FunctionType f) { return static_cast<std::size_t>(f); }
inline std::size_t index(RelationType r) { return static_cast<std::size_t>(r); }

// Normalized entity identity: abundance kind plus namespace:name.
struct EntityRef {
  bel::AbundanceKind kind = bel::AbundanceKind::p;
  std::string ns;
  std::string name;

  auto operator<=>(const EntityRef&) const = default;
  bool operator==(const EntityRef&) const = default;
};

EntityRef ref_of(const bel::Abundance& a);
bel::Abundance abundance_of(const EntityRef& e);
// "p(HGNC:ITK)"
std::string to_string(const EntityRef& e);
EntityRef parse_entity_ref(std::string_view text);

struct SbelStatement {
  FunctionType func1 = FunctionType::None;
  EntityRef em1;
  RelationType relation = RelationType::None;
  FunctionType func2 = FunctionType::None;
  EntityRef em2;
  // pmod modification codes carried through for assembly; not part of the
  // five-tuple identity.
  std::optional<std::string> mod1;
  std::optional<std::string> mod2;

  bool operator==(const SbelStatement& o) const {
    return func1 == o.func1 && em1 == o.em1 && relation == o.relation && func2 == o.func2 &&
           em2 == o.em2;
  }
};

// "<act, p(HGNC:ITK), increases, None, p(HGNC:IL5)>"
std::string to_string(const SbelStatement& s);

struct GeneralizationMap {
  // Raw wrapper keyword -> function type. Recognized wrappers (act, deg,
  // sec, tloc, complex) map to themselves without an entry.
  std::map<std::string, FunctionType, std::less<>> functions;
  // Surface relation keyword -> relation type. increases/decreases map to
  // themselves without an entry.
  std::map<std::string, RelationType, std::less<>> relations;

  static GeneralizationMap defaults();

  std::optional<FunctionType> function(std::string_view wrapper) const;
  std::optional<RelationType> relation(std::string_view keyword) const;
};

class UnmappedFunction : public DataError {
 public:
  explicit UnmappedFunction(const std::string& wrapper)
      : DataError("no function mapping for wrapper '" + wrapper + "'") {}
};

class UnmappedRelation : public DataError {
 public:
  explicit UnmappedRelation(const std::string& keyword)
      : DataError("no relation mapping for '" + keyword + "'") {}
};

class UnsupportedNesting : public DataError {
 public:
  explicit UnsupportedNesting(const std::string& term)
      : DataError("more than one function around an entity in " + term) {}
};

// Self relations and repeated complex members have no SBEL form.
class InvalidStatement : public DataError {
 public:
  using DataError::DataError;
};

std::vector<SbelStatement> bel_to_sbel(const bel::BelStatement& stmt,
                                       const GeneralizationMap& gmap = GeneralizationMap::defaults());

// Assembles SBELs into canonical, deduplicated BEL statements sorted by their
// serialization. Statements that share relation and opposite side, whose
// grouped entities all carry `complex`, merge into one complex(...) term.
// A statement with relation None is a DataError.
std::vector<bel::BelStatement> sbel_to_bel(const std::vector<SbelStatement>& stmts);

// Drops every wrapper and inner modification. Complex terms flatten into
// their members, giving one statement per (subject leaf, object leaf).
std::vector<bel::BelStatement> strip_functions(const bel::BelStatement& stmt);

}  // namespace sbelkit::sbel
