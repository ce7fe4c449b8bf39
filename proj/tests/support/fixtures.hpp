#pragma once

#include <stdexcept>
#include <string>

#include "sbelkit/corpus.hpp"

namespace sbelkit::testing {

// Mention of the first occurrence of `surface` at or after `from` (ASCII text).
inline corpus::EntityMention mention(const std::string& text, const std::string& id, const std::string& surface,
                                     const std::string& name, std::size_t from = 0) {
  const auto at = text.find(surface, from);
  if (at == std::string::npos) throw std::logic_error("fixture: '" + surface + "' not in text");
  corpus::EntityMention m;
  m.id = id;
  m.kind = "p";
  m.start = at;
  m.end = at + surface.size();
  m.surface = surface;
  m.ns = "HGNC";
  m.name = name;
  return m;
}

// Three proteins and two statements: ITK carries a kinase function toward
// IL-5 and none toward IL-3.
inline corpus::AnnotatedSentence itk_sentence() {
  corpus::AnnotatedSentence s;
  s.sen_id = "10021786";
  s.text = "ITK kinase activity is required for IL-5 and IL-3 production .";
  s.entities = {mention(s.text, "T1", "IL-5", "IL5"), mention(s.text, "T2", "ITK", "ITK"),
                mention(s.text, "T3", "IL-3", "IL3")};
  s.bel = {{"20038346", "kin(p(HGNC:ITK)) increases p(HGNC:IL5)"},
           {"20038344", "p(HGNC:ITK) increases p(HGNC:IL3)"}};
  return s;
}

inline corpus::AnnotatedSentence two_mentions(const std::string& sen_id, const std::string& bel) {
  corpus::AnnotatedSentence s;
  s.sen_id = sen_id;
  s.text = "AKT1 acts on MYC here .";
  s.entities = {mention(s.text, "T1", "AKT1", "AKT1"), mention(s.text, "T2", "MYC", "MYC")};
  if (!bel.empty()) s.bel = {{"B1", bel}};
  return s;
}

}  // namespace sbelkit::testing
