#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "sbelkit/corpus.hpp"
#include "sbelkit/synth.hpp"
#include "support/fixtures.hpp"

using namespace sbelkit;
using namespace sbelkit::corpus;
using sbel::FunctionType;
using sbel::RelationType;

namespace {

std::string itk_line() {
  return R"j({"sen_id":"10021786","text":"ITK kinase activity is required for IL-5 and IL-3 production .",)j"
         R"j("entities":[{"id":"T1","kind":"p","start":36,"end":40,"text":"IL-5","ns":"HGNC","name":"IL5"},)j"
         R"j({"id":"T2","kind":"protein","start":0,"end":3,"text":"ITK","ns":"HGNC","name":"ITK"},)j"
         R"j({"id":"T3","kind":"p","start":45,"end":49,"text":"IL-3","ns":"HGNC","name":"IL3"}],)j"
         R"j("bel":[{"stmt_id":"20038346","stmt":"kin(p(HGNC:ITK)) increases p(HGNC:IL5)"},)j"
         R"j({"stmt_id":"20038344","stmt":"p(HGNC:ITK) increases p(HGNC:IL3)"}]})j";
}

}  // namespace

TEST_CASE("read_corpus parses a record") {
  std::istringstream in(itk_line() + "\n");
  const auto c = read_corpus(in);
  REQUIRE(c.size() == 1);
  CHECK(c[0].sen_id == "10021786");
  CHECK(c[0].entities.size() == 3);
  CHECK(c[0].bel.size() == 2);
  CHECK(mention_ref(c[0].entities[1]) == sbel::parse_entity_ref("p(HGNC:ITK)"));
}

TEST_CASE("empty input is an empty corpus") {
  std::istringstream in("");
  CHECK(read_corpus(in).empty());
  std::istringstream blank("\n  \n");
  CHECK(read_corpus(blank).empty());
}

TEST_CASE("malformed lines report their line number") {
  std::istringstream in(itk_line() + "\n{not json\n");
  try {
    read_corpus(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream missing(R"j({"sen_id":"x","entities":[],"bel":[]})j");
  CHECK_THROWS_AS(read_corpus(missing), ParseError);
}

TEST_CASE("validation errors name the sentence") {
  auto s = testing::itk_sentence();
  s.entities[0].end = 500;
  try {
    validate(s);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.sen_id() == "10021786");
  }
  s = testing::itk_sentence();
  s.entities[0].surface = "IL-6";
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = testing::itk_sentence();
  s.entities[1].id = "T1";
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = testing::itk_sentence();
  s.entities[0].kind = "widget";
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("offsets count code points") {
  AnnotatedSentence s;
  s.sen_id = "u";
  s.text = "\xce\xb1-ITK induces MYC";  // "α-ITK"
  EntityMention m;
  m.id = "T1";
  m.kind = "p";
  m.start = 2;
  m.end = 5;
  m.surface = "ITK";
  m.ns = "HGNC";
  m.name = "ITK";
  s.entities = {m};
  CHECK_NOTHROW(validate(s));
  s.entities[0].start = 3;
  s.entities[0].end = 6;
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("records round-trip through the writer") {
  Corpus c = {testing::itk_sentence(), testing::two_mentions("S2", "p(HGNC:AKT1) decreases p(HGNC:MYC)")};
  std::ostringstream out;
  write_corpus(out, c);
  std::istringstream in(out.str());
  CHECK(read_corpus(in) == c);

  const auto path = std::filesystem::temp_directory_path() / "sbelkit_corpus_rt.jsonl";
  save_corpus(path, c);
  CHECK(load_corpus(path) == c);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_corpus(path), DataError);
}

TEST_CASE("duplicate sentence ids are rejected") {
  std::istringstream in(itk_line() + "\n" + itk_line() + "\n");
  CHECK_THROWS_AS(read_corpus(in), ValidationError);
}

TEST_CASE("gold SBELs of the example sentence") {
  const auto g = gold_sbels(testing::itk_sentence());
  REQUIRE(g.size() == 2);
  CHECK(g[0].stmt_id == "20038346");
  CHECK(g[0].stmt.func1 == FunctionType::act);
  CHECK(g[1].stmt.func1 == FunctionType::None);
  CHECK(g[1].stmt.em2.name == "IL3");
}

TEST_CASE("gold errors name the statement") {
  auto s = testing::two_mentions("S9", "p(HGNC:AKT1) frobnicates p(HGNC:MYC)");
  s.bel[0].stmt_id = "BAD7";
  try {
    gold_sbels(s);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("BAD7") != std::string::npos);
  }
  CHECK_THROWS_AS(corpus_stats({s}, CountingScheme::joint), DataError);
}

TEST_CASE("first statement wins for a repeated pair") {
  auto s = testing::two_mentions("S3", "act(p(HGNC:AKT1)) increases p(HGNC:MYC)");
  s.bel.push_back({"B2", "deg(p(HGNC:AKT1)) increases p(HGNC:MYC)"});
  const auto g = gold_sbels(s);
  REQUIRE(g.size() == 1);
  CHECK(g[0].stmt.func1 == FunctionType::act);
}

TEST_CASE("corpus statistics: direct count") {
  const Corpus c = {testing::two_mentions("S1", "act(p(HGNC:AKT1)) increases p(HGNC:MYC)")};
  const auto st = corpus_stats(c, CountingScheme::joint);
  CHECK(st.sentences == 1);
  CHECK(st.bel_statements == 1);
  CHECK(st.sbel_statements == 1);
  CHECK(st.relations == 1);
  CHECK(st.relation_counts.at(RelationType::increases) == 1);
  CHECK(st.functions == 1);
  CHECK(st.function_counts.at(FunctionType::act) == 1);
}

TEST_CASE("joint and separate counting differ on repeated entities") {
  // AKT1 is act toward MYC and pmod toward TP53: two joint counts, one
  // separate count for AKT1 (the first).
  AnnotatedSentence s;
  s.sen_id = "S5";
  s.text = "AKT1 drives MYC and TP53 .";
  s.entities = {testing::mention(s.text, "T1", "AKT1", "AKT1"), testing::mention(s.text, "T2", "MYC", "MYC"),
                testing::mention(s.text, "T3", "TP53", "TP53")};
  s.bel = {{"B1", "act(p(HGNC:AKT1)) increases p(HGNC:MYC)"},
           {"B2", "p(HGNC:AKT1,pmod(P)) decreases deg(p(HGNC:TP53))"}};
  const auto joint = corpus_stats({s}, CountingScheme::joint);
  const auto sep = corpus_stats({s}, CountingScheme::separate);
  CHECK(joint.functions == 3);
  CHECK(sep.functions == 2);
  CHECK(sep.function_counts.at(FunctionType::act) == 1);
  CHECK(sep.function_counts.at(FunctionType::pmod) == 0);
  CHECK(joint.relation_counts.at(RelationType::decreases) == 1);
}

TEST_CASE("split_train_dev") {
  auto make = [](std::size_t n) {
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) c.push_back(testing::two_mentions("S" + std::to_string(i), ""));
    return c;
  };
  const auto c = make(100);
  auto [train, dev] = split_train_dev(c, 0.1, 5);
  CHECK(train.size() == 90);
  CHECK(dev.size() == 10);
  auto [train2, dev2] = split_train_dev(c, 0.1, 5);
  CHECK(train == train2);
  CHECK(dev == dev2);
  auto [train3, dev3] = split_train_dev(c, 0.1, 6);
  CHECK(dev != dev3);

  // Both halves keep corpus order and together cover the corpus.
  auto pos = [&](const AnnotatedSentence& s) { return std::stoul(s.sen_id.substr(1)); };
  for (std::size_t i = 1; i < dev.size(); ++i) CHECK(pos(dev[i - 1]) < pos(dev[i]));
  std::set<std::string> all;
  for (const auto& s : train) all.insert(s.sen_id);
  for (const auto& s : dev) all.insert(s.sen_id);
  CHECK(all.size() == 100);

  const auto big = make(6353);
  auto [bt, bd] = split_train_dev(big, 0.1, 0);
  CHECK(bt.size() == 5718);
  CHECK(bd.size() == 635);

  CHECK_THROWS_AS(split_train_dev(make(1), 0.1, 0), DataError);
}

TEST_CASE("synthetic corpus: contract and determinism") {
  auto spec = SynthSpec::defaults();
  spec.relation_cues.resize(2);
  spec.function_cues = {spec.function_cues[0], spec.function_cues[2], spec.function_cues[5]};
  const auto c = synth_corpus(spec, 9);
  REQUIRE(c.size() == 500);
  for (const auto& s : c) {
    CHECK_NOTHROW(validate(s));
    CHECK_NOTHROW(gold_sbels(s));
  }
  std::ostringstream a, b;
  write_corpus(a, c);
  write_corpus(b, synth_corpus(spec, 9));
  CHECK(a.str() == b.str());

  SynthSpec empty = spec;
  empty.entities.clear();
  CHECK_THROWS_AS(synth_corpus(empty, 0), DataError);
}

TEST_CASE("synthetic corpus: the phosphorylation cue always yields pmod") {
  const auto c = synth_corpus(SynthSpec::defaults(), 21);
  std::size_t seen = 0;
  for (const auto& s : c) {
    const auto gold = gold_sbels(s);
    for (const auto& m : s.entities) {
      const std::string cue = "phosphorylation of ";
      if (m.start < cue.size() || s.text.compare(m.start - cue.size(), cue.size(), cue) != 0) continue;
      const auto ref = mention_ref(m);
      bool in_relation = false;
      for (const auto& g : gold) {
        if (g.stmt.em1 == ref) {
          in_relation = true;
          CHECK(g.stmt.func1 == FunctionType::pmod);
        }
        if (g.stmt.em2 == ref) {
          in_relation = true;
          CHECK(g.stmt.func2 == FunctionType::pmod);
        }
      }
      seen += in_relation;
    }
  }
  CHECK(seen > 20);
}

TEST_CASE("synthetic label noise flips functions") {
  auto spec = SynthSpec::defaults();
  const auto clean = synth_corpus(spec, 4);
  spec.label_noise = 0.2;
  const auto noisy = synth_corpus(spec, 4);
  REQUIRE(clean.size() == noisy.size());
  std::size_t same_text = 0, diff_bel = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    same_text += clean[i].text == noisy[i].text;
    diff_bel += clean[i].bel != noisy[i].bel;
  }
  CHECK(same_text == clean.size());
  CHECK(diff_bel > 50);
  CHECK(diff_bel < 300);
}
