#include "sbelkit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sbelkit/io.hpp"
#include "sbelkit/rng.hpp"
#include "sbelkit/text.hpp"

namespace sbelkit::corpus {
namespace {

using json = nlohmann::ordered_json;

template <typename T>
T field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return it->get<T>();
}

}  // namespace

std::optional<bel::AbundanceKind> mention_abundance_kind(std::string_view kind) {
  if (auto k = bel::abundance_kind_from(kind)) return k;
  static const std::map<std::string, bel::AbundanceKind, std::less<>> aliases = {
      {"protein", bel::AbundanceKind::p},
      {"gene/protein", bel::AbundanceKind::p},
      {"gene", bel::AbundanceKind::g},
      {"rna", bel::AbundanceKind::r},
      {"chemical", bel::AbundanceKind::a},
      {"abundance", bel::AbundanceKind::a},
      {"biological_process", bel::AbundanceKind::bp},
      {"biological process", bel::AbundanceKind::bp},
      {"pathology", bel::AbundanceKind::path},
      {"disease", bel::AbundanceKind::path},
  };
  if (auto it = aliases.find(kind); it != aliases.end()) return it->second;
  return std::nullopt;
}

sbel::EntityRef mention_ref(const EntityMention& m) {
  auto kind = mention_abundance_kind(m.kind);
  if (!kind) throw DataError("unknown entity kind '" + m.kind + "' on mention " + m.id);
  return {*kind, m.ns, m.name};
}

void validate(const AnnotatedSentence& s) {
  if (s.sen_id.empty()) throw ValidationError(s.sen_id, "empty sen_id");
  std::vector<std::size_t> offs;
  try {
    offs = text::codepoint_offsets(s.text);
  } catch (const DataError& e) {
    throw ValidationError(s.sen_id, e.what());
  }
  const std::size_t len = offs.size() - 1;
  std::set<std::string> ids;
  for (const EntityMention& m : s.entities) {
    if (!ids.insert(m.id).second) throw ValidationError(s.sen_id, "duplicate mention id " + m.id);
    if (!(m.start < m.end && m.end <= len))
      throw ValidationError(s.sen_id, "mention " + m.id + " span [" + std::to_string(m.start) + ", " +
                                          std::to_string(m.end) + ") outside text of length " +
                                          std::to_string(len));
    std::string sub = s.text.substr(offs[m.start], offs[m.end] - offs[m.start]);
    if (sub != m.surface)
      throw ValidationError(s.sen_id, "mention " + m.id + " text '" + m.surface +
                                          "' does not match span text '" + sub + "'");
    if (!mention_abundance_kind(m.kind))
      throw ValidationError(s.sen_id, "mention " + m.id + " has unknown kind '" + m.kind + "'");
  }
  std::set<std::string> stmt_ids;
  for (const BelRecord& b : s.bel)
    if (!stmt_ids.insert(b.stmt_id).second)
      throw ValidationError(s.sen_id, "duplicate statement id " + b.stmt_id);
}

AnnotatedSentence parse_record(std::string_view line, std::size_t line_no) {
  AnnotatedSentence s;
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
    s.sen_id = field<std::string>(j, "sen_id");
    s.text = field<std::string>(j, "text");
    for (const json& e : j.at("entities")) {
      EntityMention m;
      m.id = field<std::string>(e, "id");
      m.kind = field<std::string>(e, "kind");
      m.start = field<std::size_t>(e, "start");
      m.end = field<std::size_t>(e, "end");
      m.surface = field<std::string>(e, "text");
      m.ns = field<std::string>(e, "ns");
      m.name = field<std::string>(e, "name");
      s.entities.push_back(std::move(m));
    }
    for (const json& b : j.at("bel"))
      s.bel.push_back({field<std::string>(b, "stmt_id"), field<std::string>(b, "stmt")});
  } catch (const std::exception& e) {
    throw ParseError(line_no, e.what());
  }
  validate(s);
  return s;
}

std::string format_record(const AnnotatedSentence& s) {
  json j;
  j["sen_id"] = s.sen_id;
  j["text"] = s.text;
  j["entities"] = json::array();
  for (const EntityMention& m : s.entities)
    j["entities"].push_back({{"id", m.id},
                             {"kind", m.kind},
                             {"start", m.start},
                             {"end", m.end},
                             {"text", m.surface},
                             {"ns", m.ns},
                             {"name", m.name}});
  j["bel"] = json::array();
  for (const BelRecord& b : s.bel) j["bel"].push_back({{"stmt_id", b.stmt_id}, {"stmt", b.stmt}});
  return j.dump();
}

Corpus read_corpus(std::istream& in) {
  Corpus out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    AnnotatedSentence s = parse_record(line, line_no);
    if (!seen.insert(s.sen_id).second) throw ValidationError(s.sen_id, "duplicate sen_id");
    out.push_back(std::move(s));
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const AnnotatedSentence& s : corpus) out << format_record(s) << '\n';
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ostringstream ss;
  write_corpus(ss, corpus);
  io::write_file_atomic(path, ss.str());
}

std::vector<GoldSbel> gold_sbels(const AnnotatedSentence& s, const sbel::GeneralizationMap& gmap) {
  std::vector<GoldSbel> out;
  std::set<std::pair<sbel::EntityRef, sbel::EntityRef>> pairs;
  for (const BelRecord& rec : s.bel) {
    std::vector<sbel::SbelStatement> converted;
    try {
      bel::BelStatement st = bel::parse_bel(rec.stmt);
      converted = sbel::bel_to_sbel(st, gmap);
    } catch (const DataError& e) {
      throw DataError("sentence " + s.sen_id + ", statement " + rec.stmt_id + ": " + e.what());
    }
    for (sbel::SbelStatement& sb : converted)
      if (pairs.emplace(sb.em1, sb.em2).second) out.push_back({std::move(sb), rec.stmt_id});
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus, CountingScheme scheme,
                         const sbel::GeneralizationMap& gmap) {
  CorpusStats st;
  for (sbel::RelationType r : sbel::kAllRelations)
    if (r != sbel::RelationType::None) st.relation_counts[r] = 0;
  for (sbel::FunctionType f : sbel::kAllFunctions)
    if (f != sbel::FunctionType::None) st.function_counts[f] = 0;

  for (const AnnotatedSentence& s : corpus) {
    ++st.sentences;
    st.bel_statements += s.bel.size();
    const std::vector<GoldSbel> gold = gold_sbels(s, gmap);
    st.sbel_statements += gold.size();
    st.relations += gold.size();
    for (const GoldSbel& g : gold) ++st.relation_counts[g.stmt.relation];

    auto count = [&](sbel::FunctionType f) {
      if (f == sbel::FunctionType::None) return;
      ++st.functions;
      ++st.function_counts[f];
    };
    if (scheme == CountingScheme::joint) {
      for (const GoldSbel& g : gold) {
        count(g.stmt.func1);
        count(g.stmt.func2);
      }
    } else {
      // One retained function per entity: the first non-None one.
      std::map<sbel::EntityRef, sbel::FunctionType> retained;
      std::vector<sbel::EntityRef> order;
      auto visit = [&](const sbel::EntityRef& e, sbel::FunctionType f) {
        auto [it, inserted] = retained.emplace(e, f);
        if (inserted) order.push_back(e);
        else if (it->second == sbel::FunctionType::None) it->second = f;
      };
      for (const GoldSbel& g : gold) {
        visit(g.stmt.em1, g.stmt.func1);
        visit(g.stmt.em2, g.stmt.func2);
      }
      for (const sbel::EntityRef& e : order) count(retained[e]);
    }
  }
  return st;
}

std::pair<Corpus, Corpus> split_train_dev(const Corpus& corpus, double dev_ratio, std::uint64_t seed) {
  if (!(dev_ratio > 0.0 && dev_ratio < 1.0))
    throw std::invalid_argument("dev_ratio must be in (0, 1)");
  if (corpus.size() < 2) throw DataError("need at least 2 sentences to split train/dev");
  std::size_t n_dev = static_cast<std::size_t>(std::llround(dev_ratio * static_cast<double>(corpus.size())));
  n_dev = std::clamp<std::size_t>(n_dev, 1, corpus.size() - 1);

  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng(seed).shuffle(idx);
  std::vector<bool> is_dev(corpus.size(), false);
  for (std::size_t i = 0; i < n_dev; ++i) is_dev[idx[i]] = true;

  Corpus train, dev;
  for (std::size_t i = 0; i < corpus.size(); ++i) (is_dev[i] ? dev : train).push_back(corpus[i]);
  return {std::move(train), std::move(dev)};
}

}  // namespace sbelkit::corpus
