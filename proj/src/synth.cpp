#include "sbelkit/synth.hpp"

#include <numeric>
#include "sbelkit/rng.hpp"
#include "sbelkit/text.hpp"

namespace sbelkit::corpus {
namespace {

using sbel::FunctionType;

struct Builder {
  std::string text;
  std::size_t cp = 0;
  std::vector<EntityMention> mentions;

  void append(std::string_view s) {
    text += s;
    cp += text::codepoint_length(s);
  }

  void mention(const SynthEntity& e) {
    EntityMention m;
    m.id = "T" + std::to_string(mentions.size() + 1);
    m.kind = e.kind;
    m.start = cp;
    append(e.name);
    m.end = cp;
    m.surface = e.name;
    m.ns = e.ns;
    m.name = e.name;
    mentions.push_back(std::move(m));
  }
};

struct Side {
  const FunctionCue* cue = nullptr;  // null: bare entity
  std::vector<const SynthEntity*> members;
  FunctionType gold = FunctionType::None;
};

void render_side(Builder& b, const Side& side) {
  if (!side.cue) {
    b.mention(*side.members.front());
    return;
  }
  const std::string& pat = side.cue->pattern;
  const std::size_t at = pat.find("{name}");
  b.append(pat.substr(0, at));
  for (std::size_t i = 0; i < side.members.size(); ++i) {
    if (i) b.append(" / ");
    b.mention(*side.members[i]);
  }
  b.append(pat.substr(at + 6));
}

std::string abundance_text(const SynthEntity& e, bool with_pmod) {
  bel::Abundance a;
  a.kind = *mention_abundance_kind(e.kind);
  a.ns = e.ns;
  a.name = e.name;
  if (with_pmod) a.pmod = "P";
  return bel::serialize_abundance(a);
}

std::string side_bel(const Side& side) {
  switch (side.gold) {
    case FunctionType::None: return abundance_text(*side.members.front(), false);
    case FunctionType::pmod: return abundance_text(*side.members.front(), true);
    case FunctionType::complex: {
      std::string out = "complex(";
      for (std::size_t i = 0; i < side.members.size(); ++i) {
        if (i) out += ',';
        out += abundance_text(*side.members[i], false);
      }
      return out + ")";
    }
    default:
      return std::string(sbel::to_string(side.gold)) + "(" +
             abundance_text(*side.members.front(), false) + ")";
  }
}

void check_spec(const SynthSpec& spec) {
  if (spec.entities.empty()) throw DataError("synthetic spec has an empty entity vocabulary");
  if (spec.relation_cues.empty()) throw DataError("synthetic spec has no relation cues");
  if (spec.templates.empty()) throw DataError("synthetic spec has no templates");
  for (const SynthEntity& e : spec.entities)
    if (e.name.empty() || !mention_abundance_kind(e.kind))
      throw DataError("synthetic entity '" + e.name + "' is empty or has unknown kind '" + e.kind + "'");
  for (const RelationCue& r : spec.relation_cues)
    if (r.relation == sbel::RelationType::None) throw DataError("relation cue '" + r.cue + "' maps to None");
  for (const FunctionCue& f : spec.function_cues) {
    if (f.function == FunctionType::None) throw DataError("function cue '" + f.cue + "' maps to None");
    const std::size_t at = f.pattern.find("{name}");
    if (at == std::string::npos || f.pattern.find("{name}", at + 1) != std::string::npos)
      throw DataError("function cue pattern must contain {name} exactly once: " + f.pattern);
  }
  for (const std::string& t : spec.templates)
    if (t.find("{S}") == std::string::npos || t.find("{R}") == std::string::npos ||
        t.find("{O}") == std::string::npos)
      throw DataError("template must contain {S}, {R} and {O}: " + t);
  if (!(spec.function_rate >= 0.0 && spec.function_rate <= 1.0) ||
      !(spec.label_noise >= 0.0 && spec.label_noise <= 1.0))
    throw DataError("synthetic rates must lie in [0, 1]");
}

}  // namespace

SynthSpec SynthSpec::defaults() {
  SynthSpec s;
  for (const char* name :
       {"ITK",  "IL-5",  "IL-3",  "TP53", "AKT1",  "MAPK1", "EGFR", "VEGFA", "IL8",  "TNF",
        "NFKB1", "JUN",  "FOS",   "MYC",  "STAT3", "JAK2",  "SRC",  "BRCA1", "CDK2", "RB1",
        "PTEN", "MTOR",  "GSK3B", "CTNNB1", "SMAD3", "TGFB1", "IL6", "IFNG",  "CASP3", "BCL2"})
    s.entities.push_back({name, "HGNC", "p"});
  s.function_cues = {
      {"activity", FunctionType::act, "{name} activity"},
      {"degradation", FunctionType::deg, "degradation of {name}"},
      {"phosphorylation", FunctionType::pmod, "phosphorylation of {name}"},
      {"secretion", FunctionType::sec, "{name} secretion"},
      {"translocation", FunctionType::tloc, "translocation of {name}"},
      {"complex", FunctionType::complex, "the {name} complex"},
  };
  s.relation_cues = {
      {"activates", sbel::RelationType::increases},
      {"induces", sbel::RelationType::increases},
      {"inhibits", sbel::RelationType::decreases},
      {"suppresses", sbel::RelationType::decreases},
  };
  s.templates = {
      "{S} {R} {O} .",
      "we show that {S} {R} {O} .",
      "{S} {R} {O} in {D} cells .",
  };
  return s;
}

Corpus synth_corpus(const SynthSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  Rng rng(seed);
  // Label noise has its own stream; the sentences match the clean corpus.
  Rng noise(seed ^ 0x6e6f697365ULL);
  Corpus out;
  out.reserve(spec.sentences);
  for (std::size_t n = 0; n < spec.sentences; ++n) {
    const std::string& tmpl = spec.templates[rng.below(spec.templates.size())];
    const RelationCue& rel = spec.relation_cues[rng.below(spec.relation_cues.size())];

    Side sides[2];
    std::size_t needed = 0;
    for (Side& side : sides) {
      if (!spec.function_cues.empty() && rng.chance(spec.function_rate)) {
        side.cue = &spec.function_cues[rng.below(spec.function_cues.size())];
        side.gold = side.cue->function;
      }
      needed += side.gold == FunctionType::complex ? 2 : 1;
    }
    std::size_t distractors = 0;
    for (std::size_t at = tmpl.find("{D}"); at != std::string::npos; at = tmpl.find("{D}", at + 3))
      ++distractors;
    needed += distractors;
    if (needed > spec.entities.size())
      throw DataError("synthetic vocabulary too small: need " + std::to_string(needed) + " entities");

    // Partial Fisher-Yates for distinct entities.
    std::vector<std::size_t> pool(spec.entities.size());
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < needed; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    std::size_t next = 0;
    for (Side& side : sides) {
      const std::size_t k = side.gold == FunctionType::complex ? 2 : 1;
      for (std::size_t i = 0; i < k; ++i) side.members.push_back(&spec.entities[pool[next++]]);
    }

    Builder b;
    for (std::size_t i = 0; i < tmpl.size();) {
      if (tmpl.compare(i, 3, "{S}") == 0) {
        render_side(b, sides[0]);
        i += 3;
      } else if (tmpl.compare(i, 3, "{O}") == 0) {
        render_side(b, sides[1]);
        i += 3;
      } else if (tmpl.compare(i, 3, "{R}") == 0) {
        b.append(rel.cue);
        i += 3;
      } else if (tmpl.compare(i, 3, "{D}") == 0) {
        b.mention(spec.entities[pool[next++]]);
        i += 3;
      } else {
        std::size_t j = tmpl.find('{', i + 1);
        if (j == std::string::npos) j = tmpl.size();
        b.append(std::string_view(tmpl).substr(i, j - i));
        i = j;
      }
    }

    static constexpr FunctionType kNoisy[] = {FunctionType::act, FunctionType::deg, FunctionType::pmod,
                                             FunctionType::sec, FunctionType::tloc, FunctionType::None};
    for (Side& side : sides) {
      if (side.gold == FunctionType::complex || !noise.chance(spec.label_noise)) continue;
      FunctionType flipped;
      do flipped = kNoisy[noise.below(std::size(kNoisy))];
      while (flipped == side.gold);
      side.gold = flipped;
    }

    AnnotatedSentence s;
    s.sen_id = spec.id_prefix + std::to_string(n + 1);
    s.text = std::move(b.text);
    s.entities = std::move(b.mentions);
    s.bel.push_back({s.sen_id + ".B1", side_bel(sides[0]) + " " +
                                           std::string(sbel::to_string(rel.relation)) + " " +
                                           side_bel(sides[1])});
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sbelkit::corpus
