#include "sbelkit/pipeline.hpp"

#include <fstream>
#include <istream>

#include "json.hpp"
#include "sbelkit/error.hpp"

namespace sbelkit::pipeline {

using instances::Provenance;

namespace {

std::vector<double> vec_field(const nlohmann::json& j, const char* name, std::size_t dim, std::size_t line) {
  if (!j.contains(name) || !j[name].is_array()) throw ParseError(line, std::string("missing array field ") + name);
  std::vector<double> v;
  for (const auto& x : j[name]) {
    if (!x.is_number()) throw ParseError(line, std::string("non-numeric entry in ") + name);
    v.push_back(x.get<double>());
  }
  if (v.size() != dim)
    throw ParseError(line, std::string(name) + " has " + std::to_string(v.size()) + " entries, expected " +
                               std::to_string(dim));
  return v;
}

template <typename X>
model::Example example_of(const X& x, model::Labels labels, const EncodingTable* enc) {
  model::Example e;
  e.ids = x.sequence.ids;
  e.labels = labels;
  if (enc) e.encoded = &lookup(*enc, x.provenance);
  return e;
}

}  // namespace

EncodingTable parse_encodings(std::istream& in, std::size_t dim) {
  EncodingTable out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(n, e.what());
    }
    if (!j.is_object() || !j.contains("sen_id") || !j.contains("em1"))
      throw ParseError(n, "encoding record needs sen_id and em1");
    Provenance p{j["sen_id"].get<std::string>(), j["em1"].get<std::string>(),
                 j.contains("em2") ? j["em2"].get<std::string>() : std::string()};
    model::EncodedTriple t{vec_field(j, "cls", dim, n), vec_field(j, "f1", dim, n), vec_field(j, "f2", dim, n)};
    if (!out.emplace(p.key(), std::move(t)).second) throw ParseError(n, "duplicate encoding key " + p.key());
  }
  return out;
}

EncodingTable load_encodings(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_encodings(in, dim);
}

const model::EncodedTriple& lookup(const EncodingTable& table, const Provenance& p) {
  auto it = table.find(p.key());
  if (it == table.end()) throw DataError("no precomputed encoding for instance " + p.key());
  return it->second;
}

std::vector<eval::ScopedSbel> gold_sbel(const corpus::Corpus& c, const sbel::GeneralizationMap& gmap) {
  std::vector<eval::ScopedSbel> out;
  for (const auto& s : c)
    for (auto& g : corpus::gold_sbels(s, gmap)) {
      g.stmt.mod1.reset();
      g.stmt.mod2.reset();
      out.push_back({s.sen_id, std::move(g.stmt)});
    }
  return out;
}

std::vector<eval::ScopedBel> assemble(const std::vector<eval::ScopedSbel>& xs) {
  std::map<std::string, std::vector<sbel::SbelStatement>> groups;
  for (const auto& x : xs) groups[x.scope].push_back(x.stmt);
  std::vector<eval::ScopedBel> out;
  for (const auto& [scope, stmts] : groups)
    for (auto& b : sbel::sbel_to_bel(stmts)) out.push_back({scope, std::move(b)});
  return out;
}

std::vector<model::Example> joint_examples(const std::vector<instances::SbelInstance>& xs, const EncodingTable* enc) {
  std::vector<model::Example> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(example_of(x, {x.rel_label, x.f1_label, x.f2_label}, enc));
  return out;
}

std::vector<model::Example> relation_examples(const std::vector<instances::RelationInstance>& xs,
                                              const EncodingTable* enc) {
  std::vector<model::Example> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(example_of(x, {x.label, sbel::FunctionType::None, sbel::FunctionType::None}, enc));
  return out;
}

std::vector<model::Example> function_examples(const std::vector<instances::FunctionInstance>& xs,
                                              const EncodingTable* enc) {
  std::vector<model::Example> out;
  out.reserve(xs.size());
  for (const auto& x : xs)
    out.push_back(example_of(x, {sbel::RelationType::None, x.label, sbel::FunctionType::None}, enc));
  return out;
}

std::vector<model::PredictionTriple> predict_all(const model::JointModel& m, const std::vector<model::Example>& xs,
                                                 std::size_t threads) {
  std::vector<model::PredictionTriple> out(xs.size());
  model::parallel_for(xs.size(), threads, [&](std::size_t i) { out[i] = model::predict(m, xs[i]); });
  return out;
}

model::PredictionTriple one_hot(const model::Labels& labels) {
  model::PredictionTriple t;
  t.rel[sbel::index(labels.rel)] = 1.0;
  t.f1[sbel::index(labels.f1)] = 1.0;
  t.f2[sbel::index(labels.f2)] = 1.0;
  return t;
}

std::vector<model::PredictionTriple> gold_triples(const std::vector<model::Example>& xs) {
  std::vector<model::PredictionTriple> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(one_hot(x.labels));
  return out;
}

std::vector<eval::ScopedSbel> decode_joint(const std::vector<instances::SbelInstance>& xs,
                                           const std::vector<model::PredictionTriple>& triples) {
  if (xs.size() != triples.size()) throw DataError("prediction count does not match instance count");
  std::vector<eval::ScopedSbel> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].em1_ref == xs[i].em2_ref) continue;
    if (auto s = model::decode(triples[i], xs[i].em1_ref, xs[i].em2_ref))
      out.push_back({xs[i].provenance.sen_id, std::move(*s)});
  }
  return out;
}

std::vector<eval::ScopedSbel> decode_separate(const std::vector<instances::RelationInstance>& rel,
                                              const std::vector<model::PredictionTriple>& rel_triples,
                                              const std::vector<instances::FunctionInstance>& fn,
                                              const std::vector<model::PredictionTriple>& fn_triples) {
  if (rel.size() != rel_triples.size() || fn.size() != fn_triples.size())
    throw DataError("prediction count does not match instance count");
  std::map<std::pair<std::string, std::string>, sbel::FunctionType> detected;
  for (std::size_t i = 0; i < fn.size(); ++i)
    detected[{fn[i].provenance.sen_id, fn[i].provenance.em1}] = sbel::kAllFunctions[model::argmax(fn_triples[i].f1)];
  auto function_of = [&](const std::string& sen, const std::string& id) {
    auto it = detected.find({sen, id});
    return it == detected.end() ? sbel::FunctionType::None : it->second;
  };

  std::vector<eval::ScopedSbel> out;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    const auto r = sbel::kAllRelations[model::argmax(rel_triples[i].rel)];
    if (r == sbel::RelationType::None || rel[i].em1_ref == rel[i].em2_ref) continue;
    const auto& p = rel[i].provenance;
    sbel::SbelStatement s;
    s.func1 = function_of(p.sen_id, p.em1);
    s.em1 = rel[i].em1_ref;
    s.relation = r;
    s.func2 = function_of(p.sen_id, p.em2);
    s.em2 = rel[i].em2_ref;
    out.push_back({p.sen_id, std::move(s)});
  }
  return out;
}

}  // namespace sbelkit::pipeline
