#pragma once

// Annotated-sentence corpora: JSON Lines I/O, validation, gold SBEL
// extraction, corpus statistics and train/dev splitting.
//
// One record per line:
//   {"sen_id": "...", "text": "...",
//    "entities": [{"id","kind","start","end","text","ns","name"}, ...],
//    "bel": [{"stmt_id","stmt"}, ...]}
// Offsets are half-open Unicode scalar-value indices into `text`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sbelkit/sbel.hpp"

namespace sbelkit::corpus {

struct EntityMention {
  std::string id;
  std::string kind;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  std::string ns;
  std::string name;

  bool operator==(const EntityMention&) const = default;
};

struct BelRecord {
  std::string stmt_id;
  std::string stmt;

  bool operator==(const BelRecord&) const = default;
};

struct AnnotatedSentence {
  std::string sen_id;
  std::string text;
  std::vector<EntityMention> entities;
  std::vector<BelRecord> bel;

  bool operator==(const AnnotatedSentence&) const = default;
};

using Corpus = std::vector<AnnotatedSentence>;

// Maps the mention `kind` to a BEL abundance keyword. Accepts the BEL
// keywords themselves (p, g, r, a, bp, path, complex) and common category
// names (protein, gene, chemical, biological_process, ...).
std::optional<bel::AbundanceKind> mention_abundance_kind(std::string_view kind);
sbel::EntityRef mention_ref(const EntityMention& m);

// Throws ValidationError naming the sentence.
void validate(const AnnotatedSentence& s);

AnnotatedSentence parse_record(std::string_view line, std::size_t line_no = 1);
std::string format_record(const AnnotatedSentence& s);

Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

struct GoldSbel {
  sbel::SbelStatement stmt;
  std::string stmt_id;
};

// Gold SBELs of a sentence in statement order, one per ordered entity pair
// (the first statement mentioning a pair wins). Parse and conversion errors
// are rethrown as DataError naming the statement id.
std::vector<GoldSbel> gold_sbels(const AnnotatedSentence& s,
                                 const sbel::GeneralizationMap& gmap = sbel::GeneralizationMap::defaults());

enum class CountingScheme { separate, joint };

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t bel_statements = 0;
  std::size_t sbel_statements = 0;
  std::size_t relations = 0;
  std::map<sbel::RelationType, std::size_t> relation_counts;
  std::size_t functions = 0;
  std::map<sbel::FunctionType, std::size_t> function_counts;
};

// joint: every SBEL counts both of its non-None functions.
// separate: every entity counts at most once per sentence, with the first
// non-None function met in statement order.
CorpusStats corpus_stats(const Corpus& corpus, CountingScheme scheme,
                         const sbel::GeneralizationMap& gmap = sbel::GeneralizationMap::defaults());

// Sentence-level split. |dev| = round(dev_ratio * |corpus|); both halves
// keep corpus order.
std::pair<Corpus, Corpus> split_train_dev(const Corpus& corpus, double dev_ratio, std::uint64_t seed);

}  // namespace sbelkit::corpus
