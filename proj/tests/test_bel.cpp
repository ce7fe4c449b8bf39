#include "doctest.h"
#include "sbelkit/bel.hpp"
#include "support/random_bel.hpp"

using namespace sbelkit;
using namespace sbelkit::bel;

TEST_CASE("parse_bel builds the statement tree") {
  const auto s = parse_bel("act(p(HGNC:ITK)) increases p(HGNC:IL5)");
  CHECK(s.relation == "increases");
  REQUIRE_FALSE(s.subject.is_abundance());
  CHECK(s.subject.wrapped().wrapper == "act");
  REQUIRE(s.subject.wrapped().members.size() == 1);
  const auto& itk = s.subject.wrapped().members[0].abundance();
  CHECK(itk.kind == AbundanceKind::p);
  CHECK(itk.ns == "HGNC");
  CHECK(itk.name == "ITK");
  REQUIRE(s.object.is_abundance());
  CHECK(s.object.abundance().name == "IL5");
}

TEST_CASE("unrecognized wrappers are kept verbatim") {
  const auto s = parse_bel("kin(p(HGNC:ITK)) increases p(HGNC:IL5)");
  CHECK(s.subject.wrapped().wrapper == "kin");
  CHECK_FALSE(is_recognized_wrapper("kin"));
  CHECK(is_recognized_wrapper("act"));
}

TEST_CASE("pmod and named complexes") {
  const auto s = parse_bel("p(HGNC:A,pmod(P)) decreases complex(SCOMP:\"AP-1 Complex\")");
  CHECK(s.subject.abundance().pmod == "P");
  CHECK(s.object.abundance().kind == AbundanceKind::complex_entity);
  CHECK(serialize_bel(s) == "p(HGNC:A,pmod(P)) decreases complex(SCOMP:\"AP-1 Complex\")");
  CHECK_THROWS_AS(parse_bel("complex(SCOMP:X,pmod(P)) increases p(HGNC:A)"), SyntaxError);
}

TEST_CASE("syntax errors") {
  CHECK_THROWS_AS(parse_bel("p(HGNC:A) frobnicates p(HGNC:B)"), SyntaxError);
  CHECK_THROWS_AS(parse_bel("p(HGNC:A) p(HGNC:B)"), SyntaxError);
  CHECK_THROWS_AS(parse_bel("p(HGNC:A)"), SyntaxError);
  CHECK_THROWS_AS(parse_bel(""), SyntaxError);
  CHECK_THROWS_AS(parse_bel("act(p(HGNC:A) increases p(HGNC:B)"), SyntaxError);
  CHECK_THROWS_AS(parse_bel("act(p(HGNC:A))) increases p(HGNC:B)"), SyntaxError);
  CHECK_THROWS_AS(parse_bel("p(HGNC:A) increases p(HGNC:B) extra"), SyntaxError);
  CHECK_THROWS_AS(parse_bel("complex(p(HGNC:A)) increases p(HGNC:B)"), SyntaxError);
  CHECK_THROWS_AS(parse_bel("act(p(HGNC:A),p(HGNC:C)) increases p(HGNC:B)"), SyntaxError);
}

TEST_CASE("syntax errors carry the offending position") {
  try {
    parse_bel("act(p(HGNC:A) increases p(HGNC:B)");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.position() > 0);
    CHECK(e.position() <= 34);
  }
}

TEST_CASE("unknown abundance keyword is an UnknownFunction") {
  try {
    parse_bel("prot(HGNC:A) increases p(HGNC:B)");
    FAIL("expected UnknownFunction");
  } catch (const UnknownFunction& e) {
    CHECK(e.keyword() == "prot");
  }
}

TEST_CASE("serialize normalizes whitespace") {
  CHECK(serialize_bel(parse_bel("act( p( HGNC:ITK ) )  increases  p(HGNC:IL5)")) ==
        "act(p(HGNC:ITK)) increases p(HGNC:IL5)");
}

TEST_CASE("canonical complex member order") {
  const auto s = parse_bel("complex(p(HGNC:B),p(HGNC:A)) increases p(HGNC:C)");
  CHECK(serialize(canonicalize(s.subject)) == "complex(p(HGNC:A),p(HGNC:B))");
  CHECK(serialize_bel(canonicalize_bel(s)) == "complex(p(HGNC:A),p(HGNC:B)) increases p(HGNC:C)");
}

TEST_CASE("canonicalize options fold case") {
  const auto s = parse_bel("p(hgnc:itk) increases p(HGNC:Il5)");
  CanonOptions o;
  o.upper_namespace = true;
  CHECK(serialize_bel(canonicalize_bel(s, o)) == "p(HGNC:itk) increases p(HGNC:Il5)");
  o.upper_name = true;
  CHECK(serialize_bel(canonicalize_bel(s, o)) == "p(HGNC:ITK) increases p(HGNC:IL5)");
}

TEST_CASE("quoted names round-trip") {
  const auto s = parse_bel("bp(GOBP:\"cell death\") decreases a(CHEBI:\"x,y\")");
  CHECK(s.subject.abundance().name == "cell death");
  CHECK(s.object.abundance().name == "x,y");
  CHECK(parse_bel(serialize_bel(s)) == s);
}

TEST_CASE("random statements: parse inverts serialize, canonicalize is idempotent") {
  testing::RandomBel gen(7);
  for (int i = 0; i < 500; ++i) {
    const auto s = gen.statement();
    const auto text = serialize_bel(s);
    CAPTURE(text);
    const auto back = parse_bel(text);
    CHECK(back == s);
    CHECK(serialize_bel(back) == text);
    CHECK(canonicalize_bel(back) == back);
    CHECK(canonicalize_bel(canonicalize_bel(back)) == canonicalize_bel(back));
  }
}
