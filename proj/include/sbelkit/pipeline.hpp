#pragma once

// Glue between instances, models and the evaluator: gold extraction,
// batched prediction, decoding and BEL assembly.

#include <map>
#include <string>
#include <vector>

#include "sbelkit/corpus.hpp"
#include "sbelkit/evaluator.hpp"
#include "sbelkit/instances.hpp"
#include "sbelkit/model.hpp"

namespace sbelkit::pipeline {

// Precomputed [CLS]/[F1]/[F2] encodings keyed by Provenance::key().
using EncodingTable = std::map<std::string, model::EncodedTriple>;

// JSON lines: {"sen_id", "em1", "em2", "cls": [...], "f1": [...], "f2": [...]}.
// em2 may be omitted or empty for single-entity instances.
EncodingTable parse_encodings(std::istream& in, std::size_t dim);
EncodingTable load_encodings(const std::filesystem::path& path, std::size_t dim);
// Throws DataError naming the provenance when the key is absent.
const model::EncodedTriple& lookup(const EncodingTable& table, const instances::Provenance& p);

// Gold SBELs scoped by sentence. pmod codes are dropped, since predictions
// carry none.
std::vector<eval::ScopedSbel> gold_sbel(const corpus::Corpus& c,
                                        const sbel::GeneralizationMap& gmap = sbel::GeneralizationMap::defaults());

// Groups statements by scope and assembles each group into BEL.
std::vector<eval::ScopedBel> assemble(const std::vector<eval::ScopedSbel>& xs);

std::vector<model::Example> joint_examples(const std::vector<instances::SbelInstance>& xs,
                                           const EncodingTable* enc = nullptr);
std::vector<model::Example> relation_examples(const std::vector<instances::RelationInstance>& xs,
                                              const EncodingTable* enc = nullptr);
std::vector<model::Example> function_examples(const std::vector<instances::FunctionInstance>& xs,
                                              const EncodingTable* enc = nullptr);

// Pure forward passes, one triple per example in input order.
std::vector<model::PredictionTriple> predict_all(const model::JointModel& m, const std::vector<model::Example>& xs,
                                                 std::size_t threads = 1);

// One-hot triples at the gold labels.
model::PredictionTriple one_hot(const model::Labels& labels);
std::vector<model::PredictionTriple> gold_triples(const std::vector<model::Example>& xs);

// Decoded statements, in instance order. Pairs whose two mentions resolve to
// the same entity are dropped.
std::vector<eval::ScopedSbel> decode_joint(const std::vector<instances::SbelInstance>& xs,
                                           const std::vector<model::PredictionTriple>& triples);

// Separate-model assembly: the pairwise relation plus each mention's single
// detected function (None when the mention has no function instance).
std::vector<eval::ScopedSbel> decode_separate(const std::vector<instances::RelationInstance>& rel,
                                              const std::vector<model::PredictionTriple>& rel_triples,
                                              const std::vector<instances::FunctionInstance>& fn,
                                              const std::vector<model::PredictionTriple>& fn_triples);

}  // namespace sbelkit::pipeline
