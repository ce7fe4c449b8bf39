#pragma once

// Desk-scale synthetic corpora. Relations and entity functions are fully
// determined by cue words, so a model that reads the cues can be perfect on
// clean data. Optional label noise corrupts gold functions after rendering.

#include <cstdint>
#include <string>
#include <vector>

#include "sbelkit/corpus.hpp"

namespace sbelkit::corpus {

struct SynthEntity {
  std::string name;
  std::string ns = "HGNC";
  std::string kind = "p";
};

struct FunctionCue {
  std::string cue;
  sbel::FunctionType function = sbel::FunctionType::None;
  // Rendering of a participant carrying this function; "{name}" is the
  // entity (for complex: the members joined by " / ").
  std::string pattern;
};

struct RelationCue {
  std::string cue;
  sbel::RelationType relation = sbel::RelationType::increases;
};

struct SynthSpec {
  std::vector<SynthEntity> entities;
  std::vector<FunctionCue> function_cues;
  std::vector<RelationCue> relation_cues;
  // Placeholders: {S} subject side, {R} relation cue, {O} object side,
  // {D} a distractor entity outside the relation.
  std::vector<std::string> templates;
  std::size_t sentences = 500;
  // Probability that a side carries a function cue.
  double function_rate = 0.5;
  // Probability that a non-complex side's gold function is replaced by a
  // different random label after rendering.
  double label_noise = 0.0;
  std::string id_prefix = "S";

  static SynthSpec defaults();
};

Corpus synth_corpus(const SynthSpec& spec, std::uint64_t seed);

}  // namespace sbelkit::corpus
