#include <random>

#include "doctest.h"
#include "sbelkit/instances.hpp"
#include "support/fixtures.hpp"

using namespace sbelkit;
using namespace sbelkit::instances;

namespace {

corpus::AnnotatedSentence itk_sentence() {
  corpus::AnnotatedSentence s;
  s.sen_id = "S1";
  s.text = "ITK increases IL-5 levels";
  s.entities = {testing::mention(s.text, "T1", "ITK", "ITK"), testing::mention(s.text, "T2", "IL-5", "IL5")};
  return s;
}

vocab::Vocabulary vocab_of(const corpus::Corpus& c) { return vocab::build_vocabulary(c); }

std::vector<std::string> strs(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

}  // namespace

TEST_CASE("vocabulary reserves its special ids") {
  const auto v = vocab::Vocabulary::from_tokens({"itk", "[CLS]", "itk", "il"});
  CHECK(v.pad_id() == 0);
  CHECK(v.unk_id() == 1);
  CHECK(v.cls_id() == 2);
  CHECK(v.f1_id() == 3);
  CHECK(v.f2_id() == 4);
  CHECK(v.token(v.f1_id()) == "[unused1]");
  CHECK(v.token(v.f2_id()) == "[unused2]");
  CHECK(v.contains("@"));
  CHECK(v.contains("$"));
  CHECK(v.size() == 9);
  CHECK(v.id("never-seen") == v.unk_id());
}

TEST_CASE("vocabulary file round-trip and header checks") {
  const auto v = vocab::Vocabulary::from_tokens({"itk", "il", "5"});
  CHECK(vocab::Vocabulary::parse(v.serialize()) == v);
  CHECK_THROWS_AS(vocab::Vocabulary::parse("itk\nil\n"), DataError);
  std::string bad = v.serialize();
  bad.replace(bad.find("CLS 2"), 5, "CLS 7");
  CHECK_THROWS_AS(vocab::Vocabulary::parse(bad), DataError);
}

TEST_CASE("basic tokenizer") {
  CHECK(vocab::basic_tokenize("ITK increases IL-5, [CLS] levels") ==
        strs({"itk", "increases", "il", "-", "5", ",", "[", "cls", "]", "levels"}));
  CHECK(vocab::basic_tokenize("  ") .empty());
}

TEST_CASE("wordpiece") {
  const auto v = vocab::Vocabulary::from_tokens({"un", "##aff", "##able", "aff"});
  CHECK(vocab::wordpiece("unaffable", v) == strs({"un", "##aff", "##able"}));
  CHECK(vocab::wordpiece("xyz", v) == strs({"[UNK]"}));
  const vocab::Tokenizer t(&v);
  CHECK(t.tokenize("Unaffable aff") == strs({"un", "##aff", "##able", "aff"}));
}

TEST_CASE("build_vocabulary orders by frequency") {
  corpus::Corpus c = {itk_sentence(), itk_sentence()};
  c[1].sen_id = "S2";
  c[1].text = "ITK ITK zeta";
  c[1].entities.clear();
  const auto v = vocab::build_vocabulary(c);
  CHECK(v.token(7) == "itk");
  CHECK(vocab::build_vocabulary(c, 2).contains("zeta") == false);
}

TEST_CASE("candidates: all ordered pairs") {
  const auto itk = testing::itk_sentence();
  const auto pairs = build_candidates(itk);
  CHECK(pairs.size() == 6);
  CHECK(pairs[0].first->id == "T1");
  CHECK(pairs[0].second->id == "T2");
  auto one = itk_sentence();
  one.entities.pop_back();
  CHECK(build_candidates(one).empty());

  corpus::AnnotatedSentence many;
  many.sen_id = "n";
  many.text = std::string(40, 'x');
  for (int i : {10, 2, 1}) {
    corpus::EntityMention m;
    m.id = "T" + std::to_string(i);
    m.kind = "p";
    m.start = static_cast<std::size_t>(i);
    m.end = m.start + 1;
    m.surface = "x";
    many.entities.push_back(m);
  }
  const auto ordered = build_candidates(many);
  CHECK(ordered.front().first->id == "T1");
  CHECK(ordered.back().first->id == "T10");
}

TEST_CASE("marking and tokenizing") {
  const auto s = itk_sentence();
  const auto v = vocab_of({s});
  const vocab::Tokenizer tok;
  const auto fwd = mark_and_tokenize(s, s.entities[0], &s.entities[1], v, tok, 128);
  CHECK(fwd.tokens == strs({"[CLS]", "[unused1]", "[unused2]", "@", "itk", "@", "increases", "$", "il", "-", "5",
                            "$", "levels"}));
  CHECK(fwd.subject.open == 3);
  CHECK(fwd.subject.close == 5);
  REQUIRE(fwd.object.has_value());
  CHECK(fwd.object->open == 7);
  CHECK(fwd.object->close == 11);
  CHECK(fwd.ids[0] == v.cls_id());
  CHECK(fwd.ids[1] == v.f1_id());
  CHECK(fwd.ids[2] == v.f2_id());
  CHECK(fwd.ids[3] == v.id("@"));

  const auto rev = mark_and_tokenize(s, s.entities[1], &s.entities[0], v, tok, 128);
  CHECK(rev.tokens == strs({"[CLS]", "[unused1]", "[unused2]", "$", "itk", "$", "increases", "@", "il", "-", "5",
                            "@", "levels"}));

  const auto single = mark_and_tokenize(s, s.entities[1], nullptr, v, tok, 128);
  CHECK(single.tokens == strs({"[CLS]", "[unused1]", "[unused2]", "itk", "increases", "@", "il", "-", "5", "@",
                               "levels"}));
  CHECK_FALSE(single.object.has_value());
}

TEST_CASE("long sentences are windowed around both spans") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    corpus::AnnotatedSentence s;
    s.sen_id = "L" + std::to_string(trial);
    const std::size_t n = 300;
    const std::size_t a = std::uniform_int_distribution<std::size_t>(0, n - 11)(rng);
    const std::size_t b = a + 10;
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < n; ++i) {
      starts.push_back(s.text.size());
      s.text += i == a ? "alpha" : i == b ? "beta" : "w" + std::to_string(i);
      s.text += ' ';
    }
    s.entities = {testing::mention(s.text, "T1", "alpha", "A", starts[a]),
                  testing::mention(s.text, "T2", "beta", "B", starts[b])};
    const auto v = vocab_of({s});
    const vocab::Tokenizer tok;
    const auto seq = mark_and_tokenize(s, s.entities[0], &s.entities[1], v, tok, 64);
    CHECK(seq.size() == 64);
    CHECK(seq.tokens[seq.subject.open] == "@");
    CHECK(seq.tokens[seq.subject.open + 1] == "alpha");
    CHECK(seq.tokens[seq.subject.close] == "@");
    REQUIRE(seq.object.has_value());
    CHECK(seq.tokens[seq.object->open + 1] == "beta");
    CHECK(seq.object->close < seq.size());
  }
}

TEST_CASE("spans that cannot fit raise InstanceTooLong") {
  corpus::AnnotatedSentence s;
  s.sen_id = "far";
  for (int i = 0; i < 50; ++i) s.text += "w ";
  s.text = "alpha " + s.text + "beta";
  s.entities = {testing::mention(s.text, "T1", "alpha", "A"), testing::mention(s.text, "T2", "beta", "B")};
  const auto v = vocab_of({s});
  const vocab::Tokenizer tok;
  try {
    mark_and_tokenize(s, s.entities[0], &s.entities[1], v, tok, 20);
    FAIL("expected InstanceTooLong");
  } catch (const InstanceTooLong& e) {
    CHECK(e.provenance().key() == "far|T1|T2");
  }
  s.bel = {{"B1", "p(HGNC:A) increases p(HGNC:B)"}};
  InstanceConfig cfg;
  cfg.max_seq_len = 20;
  std::vector<Provenance> skipped;
  const auto xs = joint_instances({s}, v, tok, cfg, &skipped);
  CHECK(xs.empty());
  CHECK(skipped.size() == 2);
  CHECK_THROWS_AS(joint_instances({s}, v, tok, cfg), InstanceTooLong);
}

TEST_CASE("joint instances of the example sentence") {
  const auto s = testing::itk_sentence();
  const auto v = vocab_of({s});
  const vocab::Tokenizer tok;
  const auto xs = build_joint_instances(s, corpus::gold_sbels(s), v, tok, {});
  REQUIRE(xs.size() == 6);
  const SbelInstance* itk_il5 = nullptr;
  const SbelInstance* itk_il3 = nullptr;
  std::size_t positives = 0;
  for (const auto& x : xs) {
    if (x.provenance.em1 == "T2" && x.provenance.em2 == "T1") itk_il5 = &x;
    if (x.provenance.em1 == "T2" && x.provenance.em2 == "T3") itk_il3 = &x;
    positives += x.rel_label != RelationType::None;
  }
  CHECK(positives == 2);
  REQUIRE(itk_il5);
  REQUIRE(itk_il3);
  CHECK(itk_il5->f1_label == FunctionType::act);
  CHECK(itk_il5->rel_label == RelationType::increases);
  CHECK(itk_il5->f2_label == FunctionType::None);
  CHECK(itk_il3->f1_label == FunctionType::None);
  CHECK(itk_il3->rel_label == RelationType::increases);
  CHECK(itk_il5->em1_ref == sbel::parse_entity_ref("p(HGNC:ITK)"));
}

TEST_CASE("reversed pair is negative") {
  auto s = testing::two_mentions("S1", "act(p(HGNC:MYC)) increases p(HGNC:AKT1)");
  const auto v = vocab_of({s});
  const auto xs = build_joint_instances(s, corpus::gold_sbels(s), v, vocab::Tokenizer(), {});
  REQUIRE(xs.size() == 2);
  CHECK(xs[0].provenance.em1 == "T1");
  CHECK(xs[0].rel_label == RelationType::None);
  CHECK(xs[1].provenance.em1 == "T2");
  CHECK(xs[1].rel_label == RelationType::increases);
  CHECK(xs[1].f1_label == FunctionType::act);
}

TEST_CASE("no gold gives all-negative instances") {
  auto s = testing::two_mentions("S1", "");
  const auto xs = build_joint_instances(s, {}, vocab_of({s}), vocab::Tokenizer(), {});
  REQUIRE(xs.size() == 2);
  for (const auto& x : xs) {
    CHECK(x.rel_label == RelationType::None);
    CHECK(x.f1_label == FunctionType::None);
  }
}

TEST_CASE("duplicate gold for a pair gives one instance") {
  auto s = testing::two_mentions("S1", "p(HGNC:AKT1) increases p(HGNC:MYC)");
  auto gold = corpus::gold_sbels(s);
  gold.push_back(gold.front());
  const auto xs = build_joint_instances(s, gold, vocab_of({s}), vocab::Tokenizer(), {});
  CHECK(xs.size() == 2);
}

TEST_CASE("unresolvable gold entity names the statement") {
  auto s = testing::two_mentions("S1", "p(HGNC:AKT1) increases p(HGNC:TP53)");
  try {
    build_joint_instances(s, corpus::gold_sbels(s), vocab_of({s}), vocab::Tokenizer(), {});
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("B1") != std::string::npos);
  }
}

TEST_CASE("separate instances of the example sentence") {
  const auto s = testing::itk_sentence();
  const auto xs = build_separate_instances(s, corpus::gold_sbels(s), vocab_of({s}), vocab::Tokenizer(), {});
  std::size_t positives = 0;
  for (const auto& r : xs.relation_instances) positives += r.label != RelationType::None;
  CHECK(positives == 2);
  REQUIRE(xs.function_instances.size() == 3);
  for (const auto& f : xs.function_instances)
    CHECK(f.label == (f.provenance.em1 == "T2" ? FunctionType::act : FunctionType::None));
}

TEST_CASE("separate instances without functions") {
  auto s = testing::two_mentions("S1", "p(HGNC:AKT1) decreases p(HGNC:MYC)");
  const auto xs = build_separate_instances(s, corpus::gold_sbels(s), vocab_of({s}), vocab::Tokenizer(), {});
  REQUIRE(xs.relation_instances.size() == 2);
  CHECK(xs.relation_instances[0].label == RelationType::decreases);
  CHECK(xs.relation_instances[1].label == RelationType::None);
  REQUIRE(xs.function_instances.size() == 2);
  CHECK(xs.function_instances[0].label == FunctionType::None);
  CHECK(xs.function_instances[1].label == FunctionType::None);
}

TEST_CASE("separate function label: first non-None in statement order") {
  // Exhaustive over two statements with every function pair for the shared
  // subject; the oracle picks the first non-None.
  for (auto fa : sbel::kAllFunctions) {
    for (auto fb : sbel::kAllFunctions) {
      if (fa == FunctionType::complex || fb == FunctionType::complex) continue;
      corpus::AnnotatedSentence s;
      s.sen_id = "X";
      s.text = "AKT1 hits MYC and TP53 .";
      s.entities = {testing::mention(s.text, "T1", "AKT1", "AKT1"), testing::mention(s.text, "T2", "MYC", "MYC"),
                    testing::mention(s.text, "T3", "TP53", "TP53")};
      auto term = [](FunctionType f) -> std::string {
        if (f == FunctionType::None) return "p(HGNC:AKT1)";
        if (f == FunctionType::pmod) return "p(HGNC:AKT1,pmod(P))";
        return std::string(sbel::to_string(f)) + "(p(HGNC:AKT1))";
      };
      s.bel = {{"B1", term(fa) + " increases p(HGNC:MYC)"}, {"B2", term(fb) + " decreases p(HGNC:TP53)"}};
      const auto xs = build_separate_instances(s, corpus::gold_sbels(s), vocab_of({s}), vocab::Tokenizer(), {});
      const FunctionType expected = fa != FunctionType::None ? fa : fb;
      CHECK(xs.function_instances.at(0).label == expected);
    }
  }
}

TEST_CASE("negative sampling keeps positives and is seeded") {
  corpus::Corpus c;
  for (int i = 0; i < 30; ++i) {
    auto s = testing::itk_sentence();
    s.sen_id = "F" + std::to_string(i);
    c.push_back(s);
  }
  const auto v = vocab_of(c);
  InstanceConfig cfg;
  cfg.negative_keep = 0.25;
  cfg.seed = 3;
  const auto a = joint_instances(c, v, vocab::Tokenizer(), cfg);
  const auto b = joint_instances(c, v, vocab::Tokenizer(), cfg);
  std::size_t pos = 0, neg = 0;
  for (const auto& x : a) (x.rel_label == RelationType::None ? neg : pos) += 1;
  CHECK(pos == 60);
  CHECK(neg < 60);
  CHECK(neg > 0);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].provenance == b[i].provenance);
}

TEST_CASE("instance dump") {
  const auto s = itk_sentence();
  const auto xs = build_joint_instances(s, {}, vocab_of({s}), vocab::Tokenizer(), {});
  const auto dump = dump_jsonl(xs);
  CHECK(std::count(dump.begin(), dump.end(), '\n') == 2);
  CHECK(dump.find("\"tokens\"") != std::string::npos);
  CHECK(dump.find("\"sen_id\":\"S1\"") != std::string::npos);
}
