#include "sbelkit/instances.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "json.hpp"
#include "sbelkit/text.hpp"

namespace sbelkit::instances {
namespace {

using corpus::AnnotatedSentence;
using corpus::EntityMention;

// "T2" < "T10": digit runs compare by value.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na(a.data() + i, ie - i), nb(b.data() + j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return (a.size() - i) < (b.size() - j);
}

std::vector<const EntityMention*> sorted_mentions(const AnnotatedSentence& s) {
  std::vector<const EntityMention*> ms;
  for (const EntityMention& m : s.entities) ms.push_back(&m);
  std::stable_sort(ms.begin(), ms.end(),
                   [](const EntityMention* x, const EntityMention* y) { return natural_less(x->id, y->id); });
  return ms;
}

std::vector<const EntityMention*> resolve(const AnnotatedSentence& s, const sbel::EntityRef& ref,
                                          const std::string& stmt_id) {
  std::vector<const EntityMention*> exact, loose;
  for (const EntityMention& m : s.entities) {
    sbel::EntityRef r = corpus::mention_ref(m);
    if (r == ref) exact.push_back(&m);
    else if (r.ns == ref.ns && r.name == ref.name) loose.push_back(&m);
  }
  if (!exact.empty()) return exact;
  if (!loose.empty()) return loose;
  throw DataError("sentence " + s.sen_id + ", statement " + stmt_id + ": entity " + sbel::to_string(ref) +
                  " does not match any mention");
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

struct Boundary {
  std::size_t pos;
  bool open;
  std::size_t length;  // span length, orders nested markers
  int role;            // 0 subject, 1 object
};

}  // namespace

std::vector<CandidatePair> build_candidates(const AnnotatedSentence& s) {
  std::vector<CandidatePair> out;
  const auto ms = sorted_mentions(s);
  for (const EntityMention* a : ms)
    for (const EntityMention* b : ms)
      if (a != b) out.emplace_back(a, b);
  return out;
}

TokenSequence mark_and_tokenize(const AnnotatedSentence& s, const EntityMention& subject,
                                const EntityMention* object, const vocab::Vocabulary& vocab,
                                const vocab::Tokenizer& tokenizer, std::size_t max_seq_len) {
  Provenance prov{s.sen_id, subject.id, object ? object->id : std::string()};
  if (object) {
    const bool disjoint = subject.end <= object->start || object->end <= subject.start;
    const bool nested = (subject.start <= object->start && object->end <= subject.end) ||
                        (object->start <= subject.start && subject.end <= object->end);
    if (!disjoint && !nested)
      throw DataError("instance " + prov.key() + ": entity spans partially overlap");
  }

  std::vector<Boundary> bounds = {{subject.start, true, subject.end - subject.start, 0},
                                  {subject.end, false, subject.end - subject.start, 0}};
  if (object) {
    bounds.push_back({object->start, true, object->end - object->start, 1});
    bounds.push_back({object->end, false, object->end - object->start, 1});
  }
  // Closes before opens at the same offset; outer spans open first and
  // close last.
  std::stable_sort(bounds.begin(), bounds.end(), [](const Boundary& a, const Boundary& b) {
    if (a.pos != b.pos) return a.pos < b.pos;
    if (a.open != b.open) return !a.open;
    if (a.length != b.length) return a.open ? a.length > b.length : a.length < b.length;
    return a.open ? a.role < b.role : a.role > b.role;
  });

  const std::vector<std::size_t> offs = text::codepoint_offsets(s.text);
  std::vector<std::string> body;
  std::size_t marker_idx[2][2] = {{0, 0}, {0, 0}};
  std::size_t cursor = 0;
  for (const Boundary& b : bounds) {
    if (b.pos > cursor) {
      auto toks = tokenizer.tokenize(std::string_view(s.text).substr(offs[cursor], offs[b.pos] - offs[cursor]));
      body.insert(body.end(), toks.begin(), toks.end());
      cursor = b.pos;
    }
    marker_idx[b.role][b.open ? 0 : 1] = body.size();
    body.emplace_back(b.role == 0 ? vocab::kSubjectMarker : vocab::kObjectMarker);
  }
  const std::size_t n_cp = offs.size() - 1;
  if (cursor < n_cp) {
    auto toks = tokenizer.tokenize(std::string_view(s.text).substr(offs[cursor]));
    body.insert(body.end(), toks.begin(), toks.end());
  }

  if (max_seq_len < 3) throw InstanceTooLong(prov);
  const std::size_t width = max_seq_len - 3;
  std::size_t lo = marker_idx[0][0], hi = marker_idx[0][1];
  if (object) {
    lo = std::min(lo, marker_idx[1][0]);
    hi = std::max(hi, marker_idx[1][1]);
  }
  std::size_t start = 0;
  if (body.size() > width) {
    if (hi - lo + 1 > width) throw InstanceTooLong(prov);
    const std::size_t mid = (lo + hi) / 2;
    start = mid > width / 2 ? mid - width / 2 : 0;
    start = std::min(start, body.size() - width);
    start = std::min(start, lo);
    if (hi + 1 > width) start = std::max(start, hi + 1 - width);
    body = std::vector<std::string>(body.begin() + static_cast<std::ptrdiff_t>(start),
                                    body.begin() + static_cast<std::ptrdiff_t>(start + width));
  }

  TokenSequence seq;
  seq.tokens = {std::string(vocab::kCls), std::string(vocab::kF1), std::string(vocab::kF2)};
  seq.ids = {vocab.cls_id(), vocab.f1_id(), vocab.f2_id()};
  for (std::string& t : body) {
    seq.ids.push_back(vocab.id(t));
    seq.tokens.push_back(std::move(t));
  }
  seq.subject = {marker_idx[0][0] - start + 3, marker_idx[0][1] - start + 3};
  if (object) seq.object = MarkerSpan{marker_idx[1][0] - start + 3, marker_idx[1][1] - start + 3};
  return seq;
}

std::map<std::pair<std::string, std::string>, PairLabel> align_gold(const AnnotatedSentence& s,
                                                                    const std::vector<corpus::GoldSbel>& gold) {
  std::map<std::pair<std::string, std::string>, PairLabel> labels;
  for (const corpus::GoldSbel& g : gold) {
    const auto subjects = resolve(s, g.stmt.em1, g.stmt_id);
    const auto objects = resolve(s, g.stmt.em2, g.stmt_id);
    for (const EntityMention* a : subjects)
      for (const EntityMention* b : objects)
        if (a != b) labels.emplace(std::make_pair(a->id, b->id), PairLabel{g.stmt.relation, g.stmt.func1, g.stmt.func2});
  }
  return labels;
}

std::vector<SbelInstance> build_joint_instances(const AnnotatedSentence& s,
                                                const std::vector<corpus::GoldSbel>& gold,
                                                const vocab::Vocabulary& vocab,
                                                const vocab::Tokenizer& tokenizer,
                                                const InstanceConfig& config,
                                                std::vector<Provenance>* skipped) {
  const auto labels = align_gold(s, gold);
  std::mt19937_64 rng(config.seed ^ fnv1a(s.sen_id));
  std::vector<SbelInstance> out;
  for (const auto& [a, b] : build_candidates(s)) {
    PairLabel label;
    if (auto it = labels.find({a->id, b->id}); it != labels.end()) label = it->second;
    if (label.relation == RelationType::None && config.negative_keep < 1.0) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (u >= config.negative_keep) continue;
    }
    SbelInstance inst;
    inst.provenance = {s.sen_id, a->id, b->id};
    try {
      inst.sequence = mark_and_tokenize(s, *a, b, vocab, tokenizer, config.max_seq_len);
    } catch (const InstanceTooLong& e) {
      if (!skipped) throw;
      skipped->push_back(e.provenance());
      continue;
    }
    inst.rel_label = label.relation;
    inst.f1_label = label.func1;
    inst.f2_label = label.func2;
    inst.em1_ref = corpus::mention_ref(*a);
    inst.em2_ref = corpus::mention_ref(*b);
    out.push_back(std::move(inst));
  }
  return out;
}

SeparateInstances build_separate_instances(const AnnotatedSentence& s,
                                           const std::vector<corpus::GoldSbel>& gold,
                                           const vocab::Vocabulary& vocab,
                                           const vocab::Tokenizer& tokenizer,
                                           const InstanceConfig& config,
                                           std::vector<Provenance>* skipped) {
  SeparateInstances out;
  for (SbelInstance& j : build_joint_instances(s, gold, vocab, tokenizer, config, skipped))
    out.relation_instances.push_back(
        {std::move(j.sequence), j.rel_label, std::move(j.provenance), std::move(j.em1_ref), std::move(j.em2_ref)});

  // One function per mention: the first non-None one in statement order.
  std::map<std::string, FunctionType> retained;
  for (const corpus::GoldSbel& g : gold) {
    for (const EntityMention* m : resolve(s, g.stmt.em1, g.stmt_id))
      if (g.stmt.func1 != FunctionType::None) retained.emplace(m->id, g.stmt.func1);
    for (const EntityMention* m : resolve(s, g.stmt.em2, g.stmt_id))
      if (g.stmt.func2 != FunctionType::None) retained.emplace(m->id, g.stmt.func2);
  }
  for (const EntityMention* m : sorted_mentions(s)) {
    FunctionInstance fi;
    fi.provenance = {s.sen_id, m->id, ""};
    try {
      fi.sequence = mark_and_tokenize(s, *m, nullptr, vocab, tokenizer, config.max_seq_len);
    } catch (const InstanceTooLong& e) {
      if (!skipped) throw;
      skipped->push_back(e.provenance());
      continue;
    }
    if (auto it = retained.find(m->id); it != retained.end()) fi.label = it->second;
    fi.ref = corpus::mention_ref(*m);
    out.function_instances.push_back(std::move(fi));
  }
  return out;
}

std::vector<SbelInstance> joint_instances(const corpus::Corpus& c, const vocab::Vocabulary& vocab,
                                          const vocab::Tokenizer& tokenizer, const InstanceConfig& config,
                                          std::vector<Provenance>* skipped) {
  std::vector<SbelInstance> out;
  for (const AnnotatedSentence& s : c) {
    auto xs = build_joint_instances(s, corpus::gold_sbels(s, config.gmap), vocab, tokenizer, config, skipped);
    std::move(xs.begin(), xs.end(), std::back_inserter(out));
  }
  return out;
}

SeparateInstances separate_instances(const corpus::Corpus& c, const vocab::Vocabulary& vocab,
                                     const vocab::Tokenizer& tokenizer, const InstanceConfig& config,
                                     std::vector<Provenance>* skipped) {
  SeparateInstances out;
  for (const AnnotatedSentence& s : c) {
    auto xs = build_separate_instances(s, corpus::gold_sbels(s, config.gmap), vocab, tokenizer, config, skipped);
    std::move(xs.relation_instances.begin(), xs.relation_instances.end(),
              std::back_inserter(out.relation_instances));
    std::move(xs.function_instances.begin(), xs.function_instances.end(),
              std::back_inserter(out.function_instances));
  }
  return out;
}

std::string dump_jsonl(const std::vector<SbelInstance>& xs) {
  std::string out;
  for (const SbelInstance& x : xs) {
    nlohmann::ordered_json j;
    j["sen_id"] = x.provenance.sen_id;
    j["em1"] = x.provenance.em1;
    j["em2"] = x.provenance.em2;
    j["tokens"] = x.sequence.tokens;
    j["ids"] = x.sequence.ids;
    j["relation"] = sbel::to_string(x.rel_label);
    j["func1"] = sbel::to_string(x.f1_label);
    j["func2"] = sbel::to_string(x.f2_label);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace sbelkit::instances
