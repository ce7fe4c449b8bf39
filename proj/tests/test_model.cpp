#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "sbelkit/gradcheck.hpp"
#include "sbelkit/model.hpp"

using namespace sbelkit;
using namespace sbelkit::model;

namespace {

ModelShape tiny(std::size_t blocks = 1) {
  return {.vocab_size = 30, .dim = 8, .blocks = blocks, .ffn_mult = 2, .max_seq_len = 20};
}

std::vector<TokenId> random_ids(std::mt19937_64& rng, std::size_t n, std::size_t vocab) {
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = static_cast<TokenId>(rng() % vocab);
  return ids;
}

Labels random_labels(std::mt19937_64& rng) {
  return {static_cast<RelationType>(rng() % kNumRelations), static_cast<FunctionType>(rng() % kNumFunctions),
          static_cast<FunctionType>(rng() % kNumFunctions)};
}

template <std::size_t N>
std::array<double, N> random_dist(std::mt19937_64& rng) {
  std::array<double, N> p{};
  std::uniform_real_distribution<double> u(0.01, 1.0);
  double s = 0;
  for (double& x : p) s += (x = u(rng));
  for (double& x : p) x /= s;
  return p;
}

// Independent layer norm (gain 1, bias 0) of one row.
std::vector<double> ln_row(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  std::vector<double> out;
  for (double v : x) out.push_back((v - mean) / std::sqrt(var + 1e-12));
  return out;
}

double sq_norm(const Params& p) {
  double s = 0;
  for (const auto& t : p.tensors())
    for (double v : t.tensor->data) s += v * v;
  return s;
}

}  // namespace

TEST_CASE("parameter layout") {
  const auto p = init_params(tiny(2), 1);
  const auto ts = p.tensors();
  CHECK(ts.size() == 1 + 2 * 12 + 4);
  CHECK(ts.front().name == "embedding");
  CHECK(ts[1].name == "block0.wq");
  CHECK(ts.back().name == "head.fn_bias");
  std::size_t count = 0;
  for (const auto& t : ts) count += t.tensor->data.size();
  CHECK(count == p.parameter_count());
  CHECK(p.encoder.embedding.rows == 30);
  CHECK(p.heads.fn_weight.rows == kNumFunctions);
  CHECK(p.heads.rel_weight.rows == kNumRelations);
  CHECK_THROWS_AS(Params::zeros({.vocab_size = 0}), DataError);
}

TEST_CASE("initialization") {
  const auto a = init_params(tiny(), 4), b = init_params(tiny(), 4), c = init_params(tiny(), 5);
  CHECK(a.encoder.embedding == b.encoder.embedding);
  CHECK(a.encoder.embedding != c.encoder.embedding);
  const double bound = 1.0 / std::sqrt(8.0);
  for (double v : a.encoder.embedding.data) CHECK(std::abs(v) <= bound);
  for (double v : a.encoder.blocks[0].wq.data) CHECK(std::abs(v) <= bound);
  for (double v : a.encoder.blocks[0].ln1_gain.data) CHECK(v == 1.0);
  for (double v : a.heads.rel_bias.data) CHECK(v == 0.0);
}

TEST_CASE("sinusoidal positions") {
  const auto pe = positional_encoding(6, 8);
  for (std::size_t pos = 0; pos < 6; ++pos)
    for (std::size_t i = 0; i < 4; ++i) {
      const double w = 1.0 / std::pow(10000.0, 2.0 * static_cast<double>(i) / 8.0);
      CHECK(pe(pos, 2 * i) == doctest::Approx(std::sin(pos * w)).epsilon(1e-15));
      CHECK(pe(pos, 2 * i + 1) == doctest::Approx(std::cos(pos * w)).epsilon(1e-15));
    }
}

TEST_CASE("encode: one row per token") {
  std::mt19937_64 rng(1);
  const auto p = init_params(tiny(2), 2);
  for (std::size_t n : {3u, 4u, 11u, 20u}) CHECK(encode(p, random_ids(rng, n, 30)).rows() == n);
}

TEST_CASE("encode: zero weights leave the layer norm of the positions") {
  auto p = init_params(tiny(), 3);
  p.encoder.embedding.zero();
  auto& b = p.encoder.blocks[0];
  for (Matrix* m : {&b.wq, &b.wk, &b.wv, &b.wo, &b.w1, &b.b1, &b.w2, &b.b2}) m->zero();
  const std::vector<TokenId> ids = {2, 3, 4, 17};
  const auto h = encode(p, ids);
  const auto pe = positional_encoding(4, 8);
  for (std::size_t r = 0; r < 4; ++r) {
    const auto want = ln_row(pe.row(r));
    for (std::size_t c = 0; c < 8; ++c) CHECK(h.h(r, c) == doctest::Approx(want[c]).epsilon(1e-9));
  }
}

TEST_CASE("encode errors") {
  const auto p = init_params(tiny(), 3);
  CHECK_THROWS_AS(encode(p, std::vector<TokenId>{2, 3}), DataError);
  CHECK_THROWS_AS(encode(p, std::vector<TokenId>(21, 5)), DataError);
  CHECK_THROWS_AS(encode(p, std::vector<TokenId>{2, 3, 30}), DataError);
  CHECK_THROWS_AS(encode(p, std::vector<TokenId>{2, 3, -1}), DataError);
  JointModel m{p};
  CHECK_THROWS_AS(predict(m, std::vector<TokenId>(21, 5)), DataError);
}

TEST_CASE("zero heads give uniform predictions") {
  std::mt19937_64 rng(2);
  JointModel m{init_params(tiny(), 1)};
  for (const auto& t : m.params.head_tensors()) t.tensor->zero();
  const auto y = predict(m, random_ids(rng, 9, 30));
  for (double v : y.rel) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
  for (double v : y.f1) CHECK(v == doctest::Approx(1.0 / 7).epsilon(1e-15));
  CHECK(y.f1 == y.f2);
}

TEST_CASE("function heads share parameters") {
  std::mt19937_64 rng(3);
  const auto p = init_params(tiny(), 1);
  std::vector<double> v(8), c(8);
  for (double& x : v) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  for (double& x : c) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  const auto y = forward_heads(p.heads, c, v, v);
  CHECK(y.f1 == y.f2);
  std::vector<double> bad = v;
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward_heads(p.heads, c, bad, v), NumericError);
  CHECK_THROWS_AS(forward_heads(p.heads, c, std::vector<double>(7), v), DataError);
}

TEST_CASE("fast path matches the full encoder") {
  std::mt19937_64 rng(4);
  for (std::size_t blocks : {1u, 2u, 3u}) {
    JointModel m{init_params(tiny(blocks), blocks)};
    for (int trial = 0; trial < 10; ++trial) {
      const auto ids = random_ids(rng, 3 + rng() % 15, 30);
      const auto fast = predict(m, ids);
      const auto full = forward_heads(encode(m.params, ids), m.params.heads);
      CHECK(fast.rel == full.rel);
      CHECK(fast.f1 == full.f1);
      CHECK(fast.f2 == full.f2);
    }
  }
}

TEST_CASE("joint loss values") {
  PredictionTriple uniform;
  uniform.rel.fill(1.0 / 3);
  uniform.f1.fill(1.0 / 7);
  uniform.f2.fill(1.0 / 7);
  const auto unit = unit_function_weights();
  const auto weighted = default_function_weights();
  CHECK(weighted[sbel::index(FunctionType::None)] == 3.0);
  CHECK(weighted[sbel::index(FunctionType::act)] == 1.0);

  const LabeledTriple a{uniform, {RelationType::increases, FunctionType::act, FunctionType::None}};
  const double j1 = joint_loss(std::span(&a, 1), unit);
  CHECK(std::abs(j1 - (std::log(3.0) + 2 * std::log(7.0))) <= 1e-12 * j1);
  CHECK(j1 == doctest::Approx(4.9905).epsilon(1e-4));

  const LabeledTriple b{uniform, {RelationType::increases, FunctionType::None, FunctionType::None}};
  const double j3 = joint_loss(std::span(&b, 1), weighted);
  CHECK(std::abs(j3 - (std::log(3.0) + 6 * std::log(7.0))) <= 1e-12 * j3);
  CHECK(j3 == doctest::Approx(12.7742).epsilon(1e-4));

  PredictionTriple perfect{};
  perfect.rel[0] = perfect.f1[0] = perfect.f2[6] = 1.0;
  const LabeledTriple c{perfect, {RelationType::increases, FunctionType::act, FunctionType::None}};
  CHECK(joint_loss(std::span(&c, 1), weighted) == 0.0);

  // Clamped at 1e-12.
  const LabeledTriple d{perfect, {RelationType::decreases, FunctionType::act, FunctionType::None}};
  CHECK(joint_loss(std::span(&d, 1), weighted) == doctest::Approx(-std::log(1e-12)));

  CHECK_THROWS_AS(joint_loss(std::span(&a, 1), std::vector<double>(6, 1.0)), DataError);
}

TEST_CASE("masking drops function terms of negatives") {
  PredictionTriple uniform;
  uniform.rel.fill(1.0 / 3);
  uniform.f1.fill(1.0 / 7);
  uniform.f2.fill(1.0 / 7);
  const LabeledTriple neg{uniform, {RelationType::None, FunctionType::None, FunctionType::None}};
  const auto w = default_function_weights();
  CHECK(joint_loss(std::span(&neg, 1), w, true) == doctest::Approx(std::log(3.0)));
  CHECK(joint_loss(std::span(&neg, 1), w, false) == doctest::Approx(std::log(3.0) + 6 * std::log(7.0)));
}

TEST_CASE("masking leaves a function-only model its gradient") {
  std::mt19937_64 rng(8);
  JointModel m{init_params(tiny(), 8)};
  m.mask_function_loss_on_negative = true;
  const auto ids = random_ids(rng, 9, 30);
  const Example ex{ids, nullptr, {RelationType::None, FunctionType::deg, FunctionType::None}};
  Params g = Params::zeros(m.params.shape);
  CHECK(accumulate_gradient(m, ex, LossTerms::function_only(), g) > 0.0);
  CHECK(sq_norm(g) > 0.0);
  Params joint = Params::zeros(m.params.shape);
  accumulate_gradient(m, ex, LossTerms::joint(), joint);
  CHECK(std::all_of(joint.heads.fn_weight.data.begin(), joint.heads.fn_weight.data.end(),
                    [](double v) { return v == 0.0; }));
}

TEST_CASE("unit weights equal the plain triple cross-entropy bit for bit") {
  std::mt19937_64 rng(5);
  const auto unit = unit_function_weights();
  for (int batch = 0; batch < 100; ++batch) {
    std::vector<LabeledTriple> xs(1 + rng() % 16);
    double oracle = 0.0;
    for (auto& x : xs) {
      x.pred.rel = random_dist<3>(rng);
      x.pred.f1 = random_dist<7>(rng);
      x.pred.f2 = random_dist<7>(rng);
      x.gold = random_labels(rng);
      oracle -= std::log(x.pred.rel[sbel::index(x.gold.rel)]);
      oracle -= std::log(x.pred.f1[sbel::index(x.gold.f1)]);
      oracle -= std::log(x.pred.f2[sbel::index(x.gold.f2)]);
    }
    CHECK(joint_loss(xs, unit) == oracle);
  }
}

TEST_CASE("loss from logits agrees with the probability form") {
  std::mt19937_64 rng(6);
  JointModel m{init_params(tiny(), 6)};
  for (int i = 0; i < 20; ++i) {
    const auto ids = random_ids(rng, 8, 30);
    const Example ex{ids, nullptr, random_labels(rng)};
    const LabeledTriple lt{predict(m, ids), ex.labels};
    CHECK(example_loss(m, ex, LossTerms::joint()) ==
          doctest::Approx(joint_loss(std::span(&lt, 1), m.weights)).epsilon(1e-12));
  }
}

TEST_CASE("bias gradients are prediction minus one-hot") {
  std::mt19937_64 rng(7);
  JointModel m{init_params(tiny(), 7)};
  m.weights = unit_function_weights();
  for (int i = 0; i < 20; ++i) {
    EncodedTriple e{std::vector<double>(8), std::vector<double>(8), std::vector<double>(8)};
    for (auto* v : {&e.cls, &e.f1, &e.f2})
      for (double& x : *v) x = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Example ex{{}, &e, random_labels(rng)};
    Params g = Params::zeros(m.params.shape);
    accumulate_gradient(m, ex, LossTerms::relation_only(), g);
    const auto y = predict(m, e);
    for (std::size_t k = 0; k < kNumRelations; ++k)
      CHECK(g.heads.rel_bias.data[k] == y.rel[k] - (k == sbel::index(ex.labels.rel) ? 1.0 : 0.0));
    for (double v : g.heads.fn_bias.data) CHECK(v == 0.0);

    Params gf = Params::zeros(m.params.shape);
    accumulate_gradient(m, ex, LossTerms::function_only(), gf);
    for (std::size_t k = 0; k < kNumFunctions; ++k)
      CHECK(gf.heads.fn_bias.data[k] == y.f1[k] - (k == sbel::index(ex.labels.f1) ? 1.0 : 0.0));
  }
}

TEST_CASE("the None weight scales the function bias gradient by three") {
  std::mt19937_64 rng(8);
  JointModel weighted{init_params(tiny(), 8)};
  JointModel unit = weighted;
  unit.weights = unit_function_weights();
  std::vector<std::vector<TokenId>> ids;
  for (int i = 0; i < 6; ++i) ids.push_back(random_ids(rng, 9, 30));
  std::vector<Example> batch;
  for (const auto& x : ids) batch.push_back({x, nullptr, {RelationType::increases, FunctionType::None, FunctionType::None}});

  Params gw = Params::zeros(weighted.params.shape), gu = Params::zeros(unit.params.shape);
  batch_gradient(weighted, std::span(batch.data(), 1), LossTerms::function_only(), gw);
  batch_gradient(unit, std::span(batch.data(), 1), LossTerms::function_only(), gu);
  for (std::size_t k = 0; k < kNumFunctions; ++k) CHECK(gw.heads.fn_bias.data[k] == 3.0 * gu.heads.fn_bias.data[k]);

  gw.zero();
  gu.zero();
  batch_gradient(weighted, batch, LossTerms::joint(), gw);
  batch_gradient(unit, batch, LossTerms::joint(), gu);
  for (std::size_t k = 0; k < kNumFunctions; ++k)
    CHECK(gw.heads.fn_bias.data[k] == doctest::Approx(3.0 * gu.heads.fn_bias.data[k]).epsilon(1e-14));
  CHECK(gw.heads.rel_bias.data == gu.heads.rel_bias.data);
}

TEST_CASE("gradient vanishes at the optimum") {
  std::mt19937_64 rng(9);
  JointModel m{init_params(tiny(), 9)};
  m.params.heads.rel_weight.zero();
  m.params.heads.fn_weight.zero();
  m.params.heads.rel_bias.data = {60.0, 0.0, 0.0};
  m.params.heads.fn_bias.data = {60.0, 0, 0, 0, 0, 0, 0};
  const auto ids = random_ids(rng, 7, 30);
  const Example ex{ids, nullptr, {RelationType::increases, FunctionType::act, FunctionType::act}};
  Params g = Params::zeros(m.params.shape);
  const double loss = accumulate_gradient(m, ex, LossTerms::joint(), g);
  CHECK(loss < 1e-20);
  CHECK(std::sqrt(sq_norm(g)) < 1e-6);
}

TEST_CASE("finite differences: default and variants") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    GradcheckOptions o;
    o.seed = seed;
    const auto r = gradcheck(o);
    CHECK(r.passed);
    CHECK(r.max_rel_error < 1e-4);
    CHECK(r.tensors.size() == 17);
  }
  GradcheckOptions two;
  two.shape.blocks = 2;
  CHECK(gradcheck(two).passed);
  GradcheckOptions masked;
  masked.mask_function_loss_on_negative = true;
  masked.weights = unit_function_weights();
  CHECK(gradcheck(masked).passed);
  GradcheckOptions fn_only;
  fn_only.terms = LossTerms::function_only();
  CHECK(gradcheck(fn_only).passed);
  GradcheckOptions heads;
  heads.heads_only = true;
  const auto hr = gradcheck(heads);
  CHECK(hr.passed);
  CHECK(hr.tensors.size() == 4);
}

TEST_CASE("finite differences catch a corrupted gradient") {
  GradcheckOptions o;
  o.corrupt_gradient = true;
  const auto r = gradcheck(o);
  CHECK_FALSE(r.passed);
  CHECK(r.max_rel_error > 1e-4);
  CHECK(relative_error(1.0, 1.0, 1e-6) == 0.0);
  CHECK(relative_error(1e-9, 0.0, 1e-6) == doctest::Approx(1e-3));
}

TEST_CASE("batch gradients do not depend on the thread count") {
  std::mt19937_64 rng(10);
  JointModel m{init_params(tiny(2), 10)};
  std::vector<std::vector<TokenId>> ids;
  std::vector<Example> batch;
  for (int i = 0; i < 13; ++i) ids.push_back(random_ids(rng, 4 + rng() % 10, 30));
  for (const auto& x : ids) batch.push_back({x, nullptr, random_labels(rng)});
  Params g1 = Params::zeros(m.params.shape), g4 = Params::zeros(m.params.shape);
  BatchScratch scratch;
  const double l1 = batch_gradient(m, batch, LossTerms::joint(), g1, 1);
  const double l4 = batch_gradient(m, batch, LossTerms::joint(), g4, 4, &scratch);
  CHECK(l1 == l4);
  const auto a = g1.tensors();
  const auto b = g4.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tensor->data == b[i].tensor->data);

  double sum = 0;
  for (const auto& ex : batch) sum += example_loss(m, ex, LossTerms::joint());
  CHECK(l1 == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw DataError("boom");
                  }),
                  DataError);
}

TEST_CASE("Adam: zero gradient is a fixed point") {
  Params p = init_params(tiny(), 11);
  const Params before = p;
  const Params g = Params::zeros(p.shape);
  auto st = AdamState::for_params(p);
  adam_step(p, g, st, {1e-3});
  CHECK(st.step == 1);
  CHECK(p.encoder.embedding == before.encoder.embedding);
  CHECK(p.heads.fn_bias == before.heads.fn_bias);
}

TEST_CASE("Adam: constant gradient approaches unit steps") {
  const AdamConfig cfg{1e-3, 0.9, 0.999, 1e-8};
  Params p = Params::zeros({.vocab_size = 1, .dim = 2, .blocks = 1, .ffn_mult = 1, .max_seq_len = 4});
  Params g = Params::zeros(p.shape);
  for (const auto& t : g.tensors()) std::fill(t.tensor->data.begin(), t.tensor->data.end(), 0.37);
  auto st = AdamState::for_params(p);

  // One-parameter simulation.
  double x = 0, m1 = 0, m2 = 0, last = 0;
  for (int t = 1; t <= 2000; ++t) {
    const double before = p.heads.rel_bias.data[0];
    adam_step(p, g, st, cfg);
    last = before - p.heads.rel_bias.data[0];
    m1 = 0.9 * m1 + 0.1 * 0.37;
    m2 = 0.999 * m2 + 0.001 * 0.37 * 0.37;
    const double mh = m1 / (1 - std::pow(0.9, t)), vh = m2 / (1 - std::pow(0.999, t));
    x -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.heads.rel_bias.data[0] == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(last == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("Adam: non-finite gradient fails before any update") {
  Params p = init_params(tiny(), 12);
  const Params before = p;
  Params g = Params::zeros(p.shape);
  g.heads.rel_bias.data[0] = 1.0;
  g.encoder.embedding.data[5] = std::numeric_limits<double>::infinity();
  auto st = AdamState::for_params(p);
  CHECK_THROWS_AS(adam_step(p, g, st, {1e-3}), NumericError);
  CHECK(p.heads.rel_bias == before.heads.rel_bias);
  CHECK(st.step == 0);
}

TEST_CASE("identical runs give bit-identical parameters") {
  auto run = [] {
    std::mt19937_64 rng(13);
    JointModel m{init_params(tiny(), 13)};
    auto st = AdamState::for_params(m.params);
    Params g = Params::zeros(m.params.shape);
    std::vector<std::vector<TokenId>> ids;
    std::vector<Example> batch;
    for (int i = 0; i < 8; ++i) ids.push_back(random_ids(rng, 6, 30));
    for (const auto& x : ids) batch.push_back({x, nullptr, random_labels(rng)});
    for (int step = 0; step < 20; ++step) {
      g.zero();
      batch_gradient(m, batch, LossTerms::joint(), g, 2);
      adam_step(m.params, g, st, {1e-2});
    }
    return m.params;
  };
  const Params a = run(), b = run();
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i].tensor->data == tb[i].tensor->data);
}

TEST_CASE("decode") {
  const auto e1 = sbel::parse_entity_ref("p(HGNC:A)");
  const auto e2 = sbel::parse_entity_ref("p(HGNC:B)");
  PredictionTriple t{};
  t.rel = {0.1, 0.2, 0.7};
  t.f1 = {0.9, 0, 0, 0, 0, 0, 0.1};
  CHECK_FALSE(decode(t, e1, e2).has_value());

  t.rel = {0.6, 0.3, 0.1};
  t.f1 = {0.7, 0.1, 0, 0, 0, 0, 0.2};
  t.f2 = {0.1, 0, 0, 0, 0, 0, 0.9};
  const auto s = decode(t, e1, e2);
  REQUIRE(s.has_value());
  CHECK(s->func1 == FunctionType::act);
  CHECK(s->relation == RelationType::increases);
  CHECK(s->func2 == FunctionType::None);
  CHECK(s->em1 == e1);
  CHECK(s->em2 == e2);

  t.rel = {0.45, 0.45, 0.1};
  t.f1 = {0, 0, 0.5, 0, 0, 0, 0.5};
  const auto tie = decode(t, e1, e2);
  CHECK(tie->relation == RelationType::increases);
  CHECK(tie->func1 == FunctionType::pmod);
}

TEST_CASE("precomputed encodings bypass the encoder") {
  JointModel m{init_params(tiny(), 14)};
  for (const auto& t : m.params.head_tensors()) t.tensor->zero();
  const EncodedTriple zero{std::vector<double>(8), std::vector<double>(8), std::vector<double>(8)};
  const auto y = predict(m, zero);
  for (double v : y.rel) CHECK(v == doctest::Approx(1.0 / 3));
  for (double v : y.f2) CHECK(v == doctest::Approx(1.0 / 7));
  const EncodedTriple short_one{std::vector<double>(7), std::vector<double>(8), std::vector<double>(8)};
  CHECK_THROWS_AS(predict(m, short_one), DataError);
}

TEST_CASE("worker thread override") {
  setenv("SBELKIT_THREADS", "3", 1);
  CHECK(worker_threads() == 3);
  unsetenv("SBELKIT_THREADS");
  CHECK(worker_threads() >= 1);
}
