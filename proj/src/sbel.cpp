#include "sbelkit/sbel.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace sbelkit::sbel {
namespace {

using bel::Abundance;
using bel::BelStatement;
using bel::BelTerm;
using bel::WrappedTerm;

struct SideItem {
  FunctionType func;
  EntityRef ref;
  std::optional<std::string> mod;
};

std::vector<SideItem> decompose_side(const BelTerm& term, const GeneralizationMap& gmap) {
  if (term.is_abundance()) {
    const Abundance& a = term.abundance();
    if (a.pmod) return {{FunctionType::pmod, ref_of(a), a.pmod}};
    return {{FunctionType::None, ref_of(a), std::nullopt}};
  }
  const WrappedTerm& w = term.wrapped();
  std::optional<FunctionType> f = gmap.function(w.wrapper);
  if (!f) throw UnmappedFunction(w.wrapper);
  if (*f == FunctionType::None) {
    if (w.members.size() != 1) throw UnsupportedNesting(bel::serialize(term));
    return decompose_side(w.members.front(), gmap);
  }
  std::vector<SideItem> out;
  for (const BelTerm& m : w.members) {
    if (!m.is_abundance() || m.abundance().pmod) throw UnsupportedNesting(bel::serialize(term));
    out.push_back({*f, ref_of(m.abundance()), std::nullopt});
  }
  if (*f != FunctionType::complex && out.size() != 1) throw UnsupportedNesting(bel::serialize(term));
  // A complex listing the same entity twice cannot round-trip.
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j)
      if (out[i].ref == out[j].ref)
        throw InvalidStatement("repeated complex member " + to_string(out[i].ref));
  return out;
}

BelTerm entity_term(FunctionType f, const EntityRef& ref, const std::optional<std::string>& mod) {
  Abundance a = abundance_of(ref);
  switch (f) {
    case FunctionType::None:
    case FunctionType::complex:  // a complex of one is just the entity
      return BelTerm{std::move(a)};
    case FunctionType::pmod:
      a.pmod = mod.value_or("P");
      return BelTerm{std::move(a)};
    default:
      return BelTerm{WrappedTerm{std::string(to_string(f)), {BelTerm{std::move(a)}}}};
  }
}

BelTerm complex_term(const std::set<EntityRef>& members) {
  if (members.size() == 1) return BelTerm{abundance_of(*members.begin())};
  WrappedTerm w{"complex", {}};
  for (const EntityRef& e : members) w.members.push_back(BelTerm{abundance_of(e)});
  return bel::canonicalize(BelTerm{std::move(w)});
}

BelStatement make_statement(BelTerm subject, RelationType r, BelTerm object) {
  BelStatement st;
  st.subject = std::move(subject);
  st.relation = std::string(to_string(r));
  st.object = std::move(object);
  return st;
}

void collect_leaves(const BelTerm& term, std::vector<Abundance>& out) {
  if (term.is_abundance()) {
    Abundance a = term.abundance();
    a.pmod.reset();
    out.push_back(std::move(a));
    return;
  }
  for (const BelTerm& m : term.wrapped().members) collect_leaves(m, out);
}

}  // namespace

std::string_view to_string(FunctionType f) {
  switch (f) {
    case FunctionType::act: return "act";
    case FunctionType::deg: return "deg";
    case FunctionType::pmod: return "pmod";
    case FunctionType::sec: return "sec";
    case FunctionType::tloc: return "tloc";
    case FunctionType::complex: return "complex";
    case FunctionType::None: return "None";
  }
  return "?";
}

std::string_view to_string(RelationType r) {
  switch (r) {
    case RelationType::increases: return "increases";
    case RelationType::decreases: return "decreases";
    case RelationType::None: return "None";
  }
  return "?";
}

std::optional<FunctionType> function_from(std::string_view s) {
  for (FunctionType f : kAllFunctions)
    if (to_string(f) == s) return f;
  return std::nullopt;
}

std::optional<RelationType> relation_from(std::string_view s) {
  for (RelationType r : kAllRelations)
    if (to_string(r) == s) return r;
  return std::nullopt;
}

EntityRef ref_of(const Abundance& a) { return {a.kind, a.ns, a.name}; }

Abundance abundance_of(const EntityRef& e) {
  Abundance a;
  a.kind = e.kind;
  a.ns = e.ns;
  a.name = e.name;
  return a;
}

std::string to_string(const EntityRef& e) { return bel::serialize_abundance(abundance_of(e)); }

EntityRef parse_entity_ref(std::string_view text) {
  BelTerm t = bel::parse_term(text);
  if (!t.is_abundance() || t.abundance().pmod)
    throw DataError("entity reference must be a bare abundance: " + std::string(text));
  return ref_of(t.abundance());
}

std::string to_string(const SbelStatement& s) {
  std::string out = "<";
  out += to_string(s.func1);
  out += ", " + to_string(s.em1) + ", ";
  out += to_string(s.relation);
  out += ", ";
  out += to_string(s.func2);
  out += ", " + to_string(s.em2) + ">";
  return out;
}

GeneralizationMap GeneralizationMap::defaults() {
  GeneralizationMap g;
  g.functions.emplace("kin", FunctionType::act);
  g.relations.emplace("directlyIncreases", RelationType::increases);
  g.relations.emplace("directlyDecreases", RelationType::decreases);
  return g;
}

std::optional<FunctionType> GeneralizationMap::function(std::string_view wrapper) const {
  if (auto it = functions.find(wrapper); it != functions.end()) return it->second;
  if (bel::is_recognized_wrapper(wrapper)) return function_from(wrapper);
  return std::nullopt;
}

std::optional<RelationType> GeneralizationMap::relation(std::string_view keyword) const {
  if (auto it = relations.find(keyword); it != relations.end()) return it->second;
  if (keyword == "increases") return RelationType::increases;
  if (keyword == "decreases") return RelationType::decreases;
  return std::nullopt;
}

std::vector<SbelStatement> bel_to_sbel(const BelStatement& stmt, const GeneralizationMap& gmap) {
  std::optional<RelationType> rel = gmap.relation(stmt.relation);
  if (!rel) throw UnmappedRelation(stmt.relation);
  if (*rel == RelationType::None)
    throw UnmappedRelation(stmt.relation + " (maps to None)");
  const std::vector<SideItem> subj = decompose_side(stmt.subject, gmap);
  const std::vector<SideItem> obj = decompose_side(stmt.object, gmap);
  std::vector<SbelStatement> out;
  out.reserve(subj.size() * obj.size());
  for (const SideItem& s : subj) {
    for (const SideItem& o : obj) {
      if (s.ref == o.ref)
        throw InvalidStatement("entity " + to_string(s.ref) + " related to itself in " +
                               bel::serialize_bel(stmt));
      out.push_back({s.func, s.ref, *rel, o.func, o.ref, s.mod, o.mod});
    }
  }
  return out;
}

std::vector<BelStatement> sbel_to_bel(const std::vector<SbelStatement>& stmts) {
  std::vector<SbelStatement> unique;
  for (const SbelStatement& s : stmts) {
    if (s.relation == RelationType::None)
      throw DataError("cannot assemble SBEL without a relation: " + to_string(s));
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(s);
  }

  using SideKey = std::tuple<RelationType, FunctionType, EntityRef, std::optional<std::string>>;
  std::map<SideKey, std::set<EntityRef>> subject_groups;  // keyed by object side
  std::map<SideKey, std::set<EntityRef>> object_groups;   // keyed by subject side
  std::map<RelationType, std::map<EntityRef, std::set<EntityRef>>> both;

  std::vector<BelStatement> out;
  for (const SbelStatement& s : unique) {
    const bool c1 = s.func1 == FunctionType::complex;
    const bool c2 = s.func2 == FunctionType::complex;
    if (c1 && c2) {
      both[s.relation][s.em1].insert(s.em2);
    } else if (c1) {
      subject_groups[{s.relation, s.func2, s.em2, s.mod2}].insert(s.em1);
    } else if (c2) {
      object_groups[{s.relation, s.func1, s.em1, s.mod1}].insert(s.em2);
    } else {
      out.push_back(make_statement(entity_term(s.func1, s.em1, s.mod1), s.relation,
                                   entity_term(s.func2, s.em2, s.mod2)));
    }
  }
  for (const auto& [key, subjects] : subject_groups) {
    const auto& [rel, f2, e2, m2] = key;
    out.push_back(make_statement(complex_term(subjects), rel, entity_term(f2, e2, m2)));
  }
  for (const auto& [key, objects] : object_groups) {
    const auto& [rel, f1, e1, m1] = key;
    out.push_back(make_statement(entity_term(f1, e1, m1), rel, complex_term(objects)));
  }
  for (const auto& [rel, by_subject] : both) {
    // Subjects sharing an identical object set came from one cross product.
    std::map<std::set<EntityRef>, std::set<EntityRef>> by_objects;
    for (const auto& [subject, objects] : by_subject) by_objects[objects].insert(subject);
    for (const auto& [objects, subjects] : by_objects)
      out.push_back(make_statement(complex_term(subjects), rel, complex_term(objects)));
  }

  std::map<std::string, BelStatement> dedup;
  for (BelStatement& st : out) {
    BelStatement c = bel::canonicalize_bel(st);
    dedup.emplace(bel::serialize_bel(c), std::move(c));
  }
  std::vector<BelStatement> result;
  result.reserve(dedup.size());
  for (auto& [_, st] : dedup) result.push_back(std::move(st));
  return result;
}

std::vector<BelStatement> strip_functions(const BelStatement& stmt) {
  std::vector<Abundance> subj, obj;
  collect_leaves(stmt.subject, subj);
  collect_leaves(stmt.object, obj);
  std::vector<BelStatement> out;
  for (const Abundance& s : subj) {
    for (const Abundance& o : obj) {
      BelStatement st;
      st.subject = BelTerm{s};
      st.relation = stmt.relation;
      st.object = BelTerm{o};
      st.stmt_id = stmt.stmt_id;
      out.push_back(std::move(st));
    }
  }
  return out;
}

}  // namespace sbelkit::sbel
