#pragma once

// Learning instances: marked, tokenized sentences with relation and
// function labels, for the joint model and for the separate baseline.
//
// Every sequence starts with [CLS] [F1] [F2]. The subject mention is
// wrapped in '@' tokens and the object mention in '$' tokens.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sbelkit/corpus.hpp"
#include "sbelkit/vocab.hpp"

namespace sbelkit::instances {

using sbel::FunctionType;
using sbel::RelationType;

struct Provenance {
  std::string sen_id;
  std::string em1;
  std::string em2;  // empty for single-entity function instances

  auto operator<=>(const Provenance&) const = default;
  std::string key() const { return sen_id + "|" + em1 + "|" + em2; }
};

class InstanceTooLong : public DataError {
 public:
  explicit InstanceTooLong(Provenance p)
      : DataError("instance " + p.key() + " cannot fit both entity spans in max_seq_len"),
        provenance_(std::move(p)) {}
  const Provenance& provenance() const noexcept { return provenance_; }

 private:
  Provenance provenance_;
};

// Token indices of the opening and closing marker, inclusive.
struct MarkerSpan {
  std::size_t open = 0;
  std::size_t close = 0;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<vocab::TokenId> ids;
  MarkerSpan subject;
  std::optional<MarkerSpan> object;

  std::size_t size() const { return ids.size(); }
};

struct SbelInstance {
  TokenSequence sequence;
  RelationType rel_label = RelationType::None;
  FunctionType f1_label = FunctionType::None;
  FunctionType f2_label = FunctionType::None;
  Provenance provenance;
  // Entity references of the pair, for decoding predictions.
  sbel::EntityRef em1_ref;
  sbel::EntityRef em2_ref;
};

struct RelationInstance {
  TokenSequence sequence;
  RelationType label = RelationType::None;
  Provenance provenance;
  sbel::EntityRef em1_ref;
  sbel::EntityRef em2_ref;
};

struct FunctionInstance {
  TokenSequence sequence;
  FunctionType label = FunctionType::None;
  Provenance provenance;
  sbel::EntityRef ref;
};

struct SeparateInstances {
  std::vector<RelationInstance> relation_instances;
  std::vector<FunctionInstance> function_instances;
};

struct InstanceConfig {
  std::size_t max_seq_len = 128;
  // Fraction of negative (relation None) pairs kept, in (0, 1].
  double negative_keep = 1.0;
  std::uint64_t seed = 0;
  sbel::GeneralizationMap gmap = sbel::GeneralizationMap::defaults();
};

using CandidatePair = std::pair<const corpus::EntityMention*, const corpus::EntityMention*>;

// All ordered pairs of distinct mentions, sorted by (subject id, object id)
// with digit runs compared numerically.
std::vector<CandidatePair> build_candidates(const corpus::AnnotatedSentence& s);

// `object` may be null for single-entity (function) instances.
TokenSequence mark_and_tokenize(const corpus::AnnotatedSentence& s, const corpus::EntityMention& subject,
                                const corpus::EntityMention* object, const vocab::Vocabulary& vocab,
                                const vocab::Tokenizer& tokenizer, std::size_t max_seq_len);

// Gold labels for every ordered mention pair that some gold SBEL covers.
struct PairLabel {
  RelationType relation = RelationType::None;
  FunctionType func1 = FunctionType::None;
  FunctionType func2 = FunctionType::None;
};
std::map<std::pair<std::string, std::string>, PairLabel> align_gold(
    const corpus::AnnotatedSentence& s, const std::vector<corpus::GoldSbel>& gold);

// One instance per candidate pair. Too-long instances throw InstanceTooLong
// unless `skipped` is given, in which case they are recorded there.
std::vector<SbelInstance> build_joint_instances(const corpus::AnnotatedSentence& s,
                                                const std::vector<corpus::GoldSbel>& gold,
                                                const vocab::Vocabulary& vocab,
                                                const vocab::Tokenizer& tokenizer,
                                                const InstanceConfig& config,
                                                std::vector<Provenance>* skipped = nullptr);

SeparateInstances build_separate_instances(const corpus::AnnotatedSentence& s,
                                           const std::vector<corpus::GoldSbel>& gold,
                                           const vocab::Vocabulary& vocab,
                                           const vocab::Tokenizer& tokenizer,
                                           const InstanceConfig& config,
                                           std::vector<Provenance>* skipped = nullptr);

// Whole-corpus helpers; gold comes from each sentence's BEL.
std::vector<SbelInstance> joint_instances(const corpus::Corpus& c, const vocab::Vocabulary& vocab,
                                          const vocab::Tokenizer& tokenizer, const InstanceConfig& config,
                                          std::vector<Provenance>* skipped = nullptr);
SeparateInstances separate_instances(const corpus::Corpus& c, const vocab::Vocabulary& vocab,
                                     const vocab::Tokenizer& tokenizer, const InstanceConfig& config,
                                     std::vector<Provenance>* skipped = nullptr);

// One JSON object per instance: tokens, ids, labels, provenance.
std::string dump_jsonl(const std::vector<SbelInstance>& xs);

}  // namespace sbelkit::instances
