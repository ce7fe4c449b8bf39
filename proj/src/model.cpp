#include "sbelkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <random>
#include <thread>

#include "sbelkit/error.hpp"
#include "sbelkit/kernels.hpp"

namespace sbelkit::model {

namespace {

constexpr double kLnEps = 1e-12;

void alloc_block(Block& b, std::size_t d, std::size_t f) {
  b.wq.resize(d, d);
  b.wk.resize(d, d);
  b.wv.resize(d, d);
  b.wo.resize(d, d);
  b.ln1_gain.resize(1, d);
  b.ln1_bias.resize(1, d);
  b.w1.resize(d, f);
  b.b1.resize(1, f);
  b.w2.resize(f, d);
  b.b2.resize(1, d);
  b.ln2_gain.resize(1, d);
  b.ln2_bias.resize(1, d);
}

template <typename P, typename T>
void collect(P& p, std::vector<T>& out) {
  out.push_back({"embedding", &p.encoder.embedding});
  for (std::size_t i = 0; i < p.encoder.blocks.size(); ++i) {
    auto& b = p.encoder.blocks[i];
    const std::string pre = "block" + std::to_string(i) + ".";
    out.push_back({pre + "wq", &b.wq});
    out.push_back({pre + "wk", &b.wk});
    out.push_back({pre + "wv", &b.wv});
    out.push_back({pre + "wo", &b.wo});
    out.push_back({pre + "ln1_gain", &b.ln1_gain});
    out.push_back({pre + "ln1_bias", &b.ln1_bias});
    out.push_back({pre + "w1", &b.w1});
    out.push_back({pre + "b1", &b.b1});
    out.push_back({pre + "w2", &b.w2});
    out.push_back({pre + "b2", &b.b2});
    out.push_back({pre + "ln2_gain", &b.ln2_gain});
    out.push_back({pre + "ln2_bias", &b.ln2_bias});
  }
  out.push_back({"head.rel_weight", &p.heads.rel_weight});
  out.push_back({"head.rel_bias", &p.heads.rel_bias});
  out.push_back({"head.fn_weight", &p.heads.fn_weight});
  out.push_back({"head.fn_bias", &p.heads.fn_bias});
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }
double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

// y = gain * (x - mean) / sqrt(var + eps) + bias, row by row.
void ln_forward(const Matrix& x, std::size_t rows, const Matrix& gain, const Matrix& bias, Matrix& xhat,
                std::vector<double>& inv, Matrix& y) {
  const std::size_t d = x.cols;
  inv.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x.data.data() + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<double>(d);
    inv[i] = 1.0 / std::sqrt(var + kLnEps);
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xi[j] - mean) * inv[i];
      xhat(i, j) = h;
      y(i, j) = gain.data[j] * h + bias.data[j];
    }
  }
}

// dx = inv * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat)), dxhat = dy * gain.
void ln_backward(const Matrix& dy, std::size_t rows, const Matrix& xhat, const std::vector<double>& inv,
                 const Matrix& gain, Matrix& dgain, Matrix& dbias, Matrix& dx) {
  const std::size_t d = dy.cols;
  std::vector<double> dh(d);
  for (std::size_t i = 0; i < rows; ++i) {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double g = dy(i, j);
      dgain.data[j] += g * xhat(i, j);
      dbias.data[j] += g;
      dh[j] = g * gain.data[j];
      m1 += dh[j];
      m2 += dh[j] * xhat(i, j);
    }
    m1 /= static_cast<double>(d);
    m2 /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) dx(i, j) = inv[i] * (dh[j] - m1 - xhat(i, j) * m2);
  }
}

struct BlockCache {
  std::size_t nq = 0;
  Matrix q, k, v, p, ctx, a, r1hat, h1, u, g, f, r2hat, y;
  std::vector<double> inv1, inv2;
};

struct Workspace {
  Matrix x0;
  std::vector<BlockCache> blocks;
  // backward scratch
  Matrix dy, dx, dr, dh1, dg, dctx, dp, dq, dk, dv;
  std::size_t pe_len = 0, pe_dim = 0;
  Matrix pe;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

const Matrix& positions(Workspace& ws, std::size_t len, std::size_t dim) {
  if (ws.pe_len < len || ws.pe_dim != dim) {
    ws.pe = positional_encoding(std::max(len, ws.pe_len), dim);
    ws.pe_len = ws.pe.rows;
    ws.pe_dim = dim;
  }
  return ws.pe;
}

// Output rows 0..nq of block `b` applied to all rows of X.
void block_forward(const Block& b, const Matrix& x, std::size_t nq, BlockCache& c) {
  const std::size_t len = x.rows, d = x.cols, f = b.w1.cols;
  c.nq = nq;
  c.q.resize(nq, d);
  c.k.resize(len, d);
  c.v.resize(len, d);
  linalg::matmul(x, nq, b.wq, c.q);
  linalg::matmul(x, len, b.wk, c.k);
  linalg::matmul(x, len, b.wv, c.v);

  c.p.resize(nq, len);
  linalg::matmul_bt(c.q, nq, c.k, len, c.p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < nq; ++i) {
    auto row = c.p.row(i);
    double mx = -INFINITY;
    for (auto& s : row) {
      s *= scale;
      mx = std::max(mx, s);
    }
    double z = 0.0;
    for (auto& s : row) {
      s = std::exp(s - mx);
      z += s;
    }
    for (auto& s : row) s /= z;
  }

  c.ctx.resize(nq, d);
  linalg::matmul(c.p, nq, c.v, c.ctx);
  c.a.resize(nq, d);
  linalg::matmul(c.ctx, nq, b.wo, c.a);
  for (std::size_t i = 0; i < nq * d; ++i) c.a.data[i] += x.data[i];

  c.r1hat.resize(nq, d);
  c.h1.resize(nq, d);
  ln_forward(c.a, nq, b.ln1_gain, b.ln1_bias, c.r1hat, c.inv1, c.h1);

  c.u.resize(nq, f);
  linalg::matmul(c.h1, nq, b.w1, c.u);
  c.g.resize(nq, f);
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      c.u(i, j) += b.b1.data[j];
      c.g(i, j) = gelu(c.u(i, j));
    }
  c.f.resize(nq, d);
  linalg::matmul(c.g, nq, b.w2, c.f);
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t j = 0; j < d; ++j) c.f(i, j) += b.b2.data[j] + c.h1(i, j);

  c.r2hat.resize(nq, d);
  c.y.resize(nq, d);
  ln_forward(c.f, nq, b.ln2_gain, b.ln2_bias, c.r2hat, c.inv2, c.y);
}

// Given dY (rows 0..nq), accumulate parameter gradients into `g` and write
// dX (all rows of the block input) into ws.dx.
void block_backward(const Block& b, const Matrix& x, BlockCache& c, const Matrix& dy, Block& g, Workspace& ws) {
  const std::size_t len = x.rows, d = x.cols, f = b.w1.cols, nq = c.nq;
  const auto& kt = kernels::active();

  // second residual + layer norm
  ws.dr.resize(nq, d);
  ln_backward(dy, nq, c.r2hat, c.inv2, b.ln2_gain, g.ln2_gain, g.ln2_bias, ws.dr);
  ws.dh1 = ws.dr;
  for (std::size_t i = 0; i < nq; ++i) kt.add(ws.dr.data.data() + i * d, g.b2.data.data(), d);
  linalg::matmul_at_acc(c.g, ws.dr, nq, g.w2);
  ws.dg.resize(nq, f);
  linalg::matmul_bt(ws.dr, nq, b.w2, f, ws.dg);
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t j = 0; j < f; ++j) ws.dg(i, j) *= gelu_grad(c.u(i, j));
  for (std::size_t i = 0; i < nq; ++i) kt.add(ws.dg.data.data() + i * f, g.b1.data.data(), f);
  linalg::matmul_at_acc(c.h1, ws.dg, nq, g.w1);
  linalg::matmul_bt(ws.dg, nq, b.w1, d, ws.dh1, true);

  // first residual + layer norm
  ln_backward(ws.dh1, nq, c.r1hat, c.inv1, b.ln1_gain, g.ln1_gain, g.ln1_bias, ws.dr);
  ws.dx.resize(len, d);
  for (std::size_t i = 0; i < nq * d; ++i) ws.dx.data[i] = ws.dr.data[i];

  linalg::matmul_at_acc(c.ctx, ws.dr, nq, g.wo);
  ws.dctx.resize(nq, d);
  linalg::matmul_bt(ws.dr, nq, b.wo, d, ws.dctx);

  ws.dp.resize(nq, len);
  linalg::matmul_bt(ws.dctx, nq, c.v, len, ws.dp);
  ws.dv.resize(len, d);
  linalg::matmul_at_acc(c.p, ws.dctx, nq, ws.dv);

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < nq; ++i) {
    auto pi = c.p.row(i);
    auto dpi = ws.dp.row(i);
    const double s = kt.dot(pi.data(), dpi.data(), len);
    for (std::size_t j = 0; j < len; ++j) dpi[j] = pi[j] * (dpi[j] - s) * scale;
  }
  ws.dq.resize(nq, d);
  linalg::matmul(ws.dp, nq, c.k, ws.dq);
  ws.dk.resize(len, d);
  linalg::matmul_at_acc(ws.dp, c.q, nq, ws.dk);

  linalg::matmul_at_acc(x, ws.dq, nq, g.wq);
  linalg::matmul_at_acc(x, ws.dk, len, g.wk);
  linalg::matmul_at_acc(x, ws.dv, len, g.wv);
  linalg::matmul_bt(ws.dq, nq, b.wq, d, ws.dx, true);
  linalg::matmul_bt(ws.dk, len, b.wk, d, ws.dx, true);
  linalg::matmul_bt(ws.dv, len, b.wv, d, ws.dx, true);
}

void check_ids(const Params& p, std::span<const TokenId> ids) {
  if (ids.size() < 3) throw DataError("token sequence shorter than the three classification tokens");
  if (ids.size() > p.shape.max_seq_len)
    throw DataError("token sequence of length " + std::to_string(ids.size()) + " exceeds max_seq_len " +
                    std::to_string(p.shape.max_seq_len));
  for (auto id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= p.encoder.embedding.rows)
      throw DataError("token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(p.encoder.embedding.rows));
}

// Token embeddings are scaled by sqrt(d) so they are on the same footing as
// the unit-amplitude positional encoding.
double embedding_scale(std::size_t d) { return std::sqrt(static_cast<double>(d)); }

// Runs the encoder; the last block computes only `last_rows` output rows.
const Matrix& forward_encoder(const Params& p, std::span<const TokenId> ids, std::size_t last_rows,
                              Workspace& ws) {
  check_ids(p, ids);
  const std::size_t len = ids.size(), d = p.shape.dim;
  const Matrix& pe = positions(ws, len, d);
  ws.x0.resize(len, d);
  const double scale = embedding_scale(d);
  for (std::size_t i = 0; i < len; ++i) {
    const double* e = p.encoder.embedding.data.data() + static_cast<std::size_t>(ids[i]) * d;
    for (std::size_t j = 0; j < d; ++j) ws.x0(i, j) = scale * e[j] + pe(i, j);
  }
  const std::size_t nb = p.encoder.blocks.size();
  ws.blocks.resize(nb);
  const Matrix* x = &ws.x0;
  for (std::size_t b = 0; b < nb; ++b) {
    block_forward(p.encoder.blocks[b], *x, b + 1 == nb ? std::min(last_rows, len) : len, ws.blocks[b]);
    x = &ws.blocks[b].y;
  }
  return *x;
}

template <std::size_t N>
void logits(const Matrix& w, const Matrix& bias, std::span<const double> h, std::array<double, N>& z) {
  const auto& kt = kernels::active();
  for (std::size_t i = 0; i < N; ++i) z[i] = kt.dot(w.data.data() + i * w.cols, h.data(), h.size()) + bias.data[i];
}

template <std::size_t N>
double log_softmax(std::array<double, N>& z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  for (auto& v : z) v -= lse;
  return lse;
}

template <std::size_t N>
void softmax(std::array<double, N>& z) {
  log_softmax(z);
  for (auto& v : z) v = std::exp(v);
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
}

void check_encoded(const Params& p, const EncodedTriple& e) {
  const std::size_t d = p.shape.dim;
  if (e.cls.size() != d || e.f1.size() != d || e.f2.size() != d)
    throw DataError("precomputed encoding dimension does not match model dim " + std::to_string(d));
}

struct HeadGrad {
  std::array<double, kNumRelations> dr{};
  std::array<double, kNumFunctions> d1{}, d2{};
};

// Loss from log-softmax of the logits and its gradient w.r.t. the logits.
double head_loss(const JointModel& m, std::span<const double> cls, std::span<const double> f1,
                 std::span<const double> f2, const Labels& gold, const LossTerms& terms, HeadGrad& hg) {
  const auto& h = m.params.heads;
  double loss = 0.0;
  if (terms.relation) {
    std::array<double, kNumRelations> z{};
    logits(h.rel_weight, h.rel_bias, cls, z);
    log_softmax(z);
    const std::size_t g = sbel::index(gold.rel);
    loss -= z[g];
    for (std::size_t i = 0; i < kNumRelations; ++i) hg.dr[i] = std::exp(z[i]) - (i == g ? 1.0 : 0.0);
  }
  const bool masked = terms.relation && m.mask_function_loss_on_negative && gold.rel == RelationType::None;
  auto fn_term = [&](std::span<const double> hv, FunctionType label, std::array<double, kNumFunctions>& dz) {
    std::array<double, kNumFunctions> z{};
    logits(h.fn_weight, h.fn_bias, hv, z);
    log_softmax(z);
    const std::size_t g = sbel::index(label);
    const double w = m.weights[g];
    loss -= w * z[g];
    for (std::size_t i = 0; i < kNumFunctions; ++i) dz[i] = w * (std::exp(z[i]) - (i == g ? 1.0 : 0.0));
  };
  if (terms.func1 && !masked) fn_term(f1, gold.f1, hg.d1);
  if (terms.func2 && !masked) fn_term(f2, gold.f2, hg.d2);
  return loss;
}

template <std::size_t N>
void head_backward(const std::array<double, N>& dz, std::span<const double> h, const Matrix& w, Matrix& gw,
                   Matrix& gb, std::span<double> dh) {
  const auto& kt = kernels::active();
  for (std::size_t i = 0; i < N; ++i) {
    if (dz[i] == 0.0) continue;
    kt.axpy(dz[i], h.data(), gw.data.data() + i * gw.cols, h.size());
    gb.data[i] += dz[i];
    if (!dh.empty()) kt.axpy(dz[i], w.data.data() + i * w.cols, dh.data(), dh.size());
  }
}

}  // namespace

Params Params::zeros(const ModelShape& shape) {
  if (shape.vocab_size == 0 || shape.dim == 0 || shape.ffn_mult == 0 || shape.blocks == 0)
    throw DataError("model shape must have positive vocab_size, dim, ffn_mult and blocks");
  Params p;
  p.shape = shape;
  p.encoder.embedding.resize(shape.vocab_size, shape.dim);
  p.encoder.blocks.resize(shape.blocks);
  for (auto& b : p.encoder.blocks) alloc_block(b, shape.dim, shape.ffn_dim());
  p.heads.rel_weight.resize(kNumRelations, shape.dim);
  p.heads.rel_bias.resize(1, kNumRelations);
  p.heads.fn_weight.resize(kNumFunctions, shape.dim);
  p.heads.fn_bias.resize(1, kNumFunctions);
  return p;
}

std::vector<NamedTensor> Params::tensors() {
  std::vector<NamedTensor> out;
  collect(*this, out);
  return out;
}

std::vector<ConstNamedTensor> Params::tensors() const {
  std::vector<ConstNamedTensor> out;
  collect(*this, out);
  return out;
}

std::vector<NamedTensor> Params::head_tensors() {
  return {{"head.rel_weight", &heads.rel_weight},
          {"head.rel_bias", &heads.rel_bias},
          {"head.fn_weight", &heads.fn_weight},
          {"head.fn_bias", &heads.fn_bias}};
}

void Params::zero() {
  for (auto& t : tensors()) t.tensor->zero();
}

std::size_t Params::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.tensor->data.size();
  return n;
}

Params init_params(const ModelShape& shape, std::uint64_t seed) {
  Params p = Params::zeros(shape);
  std::mt19937_64 rng(seed);
  const double a = 1.0 / std::sqrt(static_cast<double>(shape.dim));
  // Portable uniform draw; std::uniform_real_distribution is not
  // specified bit-for-bit across standard libraries.
  auto draw = [&] { return a * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0); };
  auto fill = [&](Matrix& m) {
    for (auto& v : m.data) v = draw();
  };
  fill(p.encoder.embedding);
  for (auto& b : p.encoder.blocks) {
    fill(b.wq);
    fill(b.wk);
    fill(b.wv);
    fill(b.wo);
    fill(b.w1);
    fill(b.w2);
    std::fill(b.ln1_gain.data.begin(), b.ln1_gain.data.end(), 1.0);
    std::fill(b.ln2_gain.data.begin(), b.ln2_gain.data.end(), 1.0);
  }
  fill(p.heads.rel_weight);
  fill(p.heads.fn_weight);
  return p;
}

FunctionWeights default_function_weights() { return {1, 1, 1, 1, 1, 1, 3}; }
FunctionWeights unit_function_weights() { return {1, 1, 1, 1, 1, 1, 1}; }

Matrix positional_encoding(std::size_t length, std::size_t dim) {
  Matrix pe(length, dim);
  for (std::size_t pos = 0; pos < length; ++pos)
    for (std::size_t i = 0; i < dim; i += 2) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      pe(pos, i) = std::sin(angle);
      if (i + 1 < dim) pe(pos, i + 1) = std::cos(angle);
    }
  return pe;
}

HiddenStates encode(const Params& params, std::span<const TokenId> ids) {
  auto& ws = workspace();
  return {forward_encoder(params, ids, ids.size(), ws)};
}

PredictionTriple forward_heads(const HeadParams& heads, std::span<const double> cls, std::span<const double> f1,
                               std::span<const double> f2) {
  check_finite(cls, "hidden state C");
  check_finite(f1, "hidden state f1");
  check_finite(f2, "hidden state f2");
  if (cls.size() != heads.rel_weight.cols || f1.size() != heads.fn_weight.cols || f2.size() != heads.fn_weight.cols)
    throw DataError("hidden state dimension does not match head parameters");
  PredictionTriple t;
  logits(heads.rel_weight, heads.rel_bias, cls, t.rel);
  logits(heads.fn_weight, heads.fn_bias, f1, t.f1);
  logits(heads.fn_weight, heads.fn_bias, f2, t.f2);
  softmax(t.rel);
  softmax(t.f1);
  softmax(t.f2);
  return t;
}

PredictionTriple forward_heads(const HiddenStates& h, const HeadParams& heads) {
  if (h.rows() < 3) throw DataError("hidden states need at least three rows");
  return forward_heads(heads, h.cls(), h.f1(), h.f2());
}

double joint_loss(std::span<const LabeledTriple> batch, std::span<const double> weights,
                  bool mask_function_loss_on_negative) {
  if (weights.size() != kNumFunctions)
    throw DataError("function weight vector has " + std::to_string(weights.size()) + " entries, expected " +
                    std::to_string(kNumFunctions));
  double j = 0.0;
  for (const auto& [pred, gold] : batch) {
    j -= std::log(std::max(pred.rel[sbel::index(gold.rel)], kProbClamp));
    if (mask_function_loss_on_negative && gold.rel == RelationType::None) continue;
    const std::size_t g1 = sbel::index(gold.f1), g2 = sbel::index(gold.f2);
    j -= weights[g1] * std::log(std::max(pred.f1[g1], kProbClamp));
    j -= weights[g2] * std::log(std::max(pred.f2[g2], kProbClamp));
  }
  return j;
}

double accumulate_gradient(const JointModel& model, const Example& ex, const LossTerms& terms, Params& grads) {
  const Params& p = model.params;
  HeadGrad hg;
  if (ex.encoded) {
    check_encoded(p, *ex.encoded);
    const auto& e = *ex.encoded;
    const double loss = head_loss(model, e.cls, e.f1, e.f2, ex.labels, terms, hg);
    head_backward(hg.dr, e.cls, p.heads.rel_weight, grads.heads.rel_weight, grads.heads.rel_bias, {});
    head_backward(hg.d1, e.f1, p.heads.fn_weight, grads.heads.fn_weight, grads.heads.fn_bias, {});
    head_backward(hg.d2, e.f2, p.heads.fn_weight, grads.heads.fn_weight, grads.heads.fn_bias, {});
    return loss;
  }

  auto& ws = workspace();
  const Matrix& y = forward_encoder(p, ex.ids, 3, ws);
  const double loss = head_loss(model, y.row(0), y.row(1), y.row(2), ex.labels, terms, hg);
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");

  const std::size_t d = p.shape.dim;
  ws.dy.resize(3, d);
  head_backward(hg.dr, y.row(0), p.heads.rel_weight, grads.heads.rel_weight, grads.heads.rel_bias, ws.dy.row(0));
  head_backward(hg.d1, y.row(1), p.heads.fn_weight, grads.heads.fn_weight, grads.heads.fn_bias, ws.dy.row(1));
  head_backward(hg.d2, y.row(2), p.heads.fn_weight, grads.heads.fn_weight, grads.heads.fn_bias, ws.dy.row(2));

  Matrix dy = ws.dy;
  for (std::size_t b = p.encoder.blocks.size(); b-- > 0;) {
    const Matrix& x = b == 0 ? ws.x0 : ws.blocks[b - 1].y;
    block_backward(p.encoder.blocks[b], x, ws.blocks[b], dy, grads.encoder.blocks[b], ws);
    dy = ws.dx;
  }
  const double scale = embedding_scale(d);
  for (std::size_t i = 0; i < ex.ids.size(); ++i)
    kernels::active().axpy(scale, dy.data.data() + i * d,
                           grads.encoder.embedding.data.data() + static_cast<std::size_t>(ex.ids[i]) * d, d);
  return loss;
}

double batch_gradient(const JointModel& model, std::span<const Example> batch, const LossTerms& terms,
                      Params& grads, std::size_t threads, BatchScratch* scratch) {
  BatchScratch local;
  BatchScratch& s = scratch ? *scratch : local;
  while (s.slots.size() < batch.size()) s.slots.push_back(Params::zeros(model.params.shape));
  const bool heads_only = std::all_of(batch.begin(), batch.end(), [](const Example& e) { return e.encoded; });

  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    Params& g = s.slots[i];
    if (heads_only)
      for (auto& t : g.head_tensors()) t.tensor->zero();
    else
      g.zero();
    losses[i] = accumulate_gradient(model, batch[i], terms, g);
  });

  double total = 0.0;
  auto dst = heads_only ? grads.head_tensors() : grads.tensors();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += losses[i];
    auto src = heads_only ? s.slots[i].head_tensors() : s.slots[i].tensors();
    for (std::size_t t = 0; t < dst.size(); ++t)
      kernels::active().add(src[t].tensor->data.data(), dst[t].tensor->data.data(), dst[t].tensor->data.size());
  }
  return total;
}

double example_loss(const JointModel& model, const Example& ex, const LossTerms& terms) {
  HeadGrad hg;
  if (ex.encoded) {
    check_encoded(model.params, *ex.encoded);
    return head_loss(model, ex.encoded->cls, ex.encoded->f1, ex.encoded->f2, ex.labels, terms, hg);
  }
  auto& ws = workspace();
  const Matrix& y = forward_encoder(model.params, ex.ids, 3, ws);
  return head_loss(model, y.row(0), y.row(1), y.row(2), ex.labels, terms, hg);
}

PredictionTriple predict(const JointModel& model, std::span<const TokenId> ids) {
  auto& ws = workspace();
  const Matrix& y = forward_encoder(model.params, ids, 3, ws);
  return forward_heads(model.params.heads, y.row(0), y.row(1), y.row(2));
}

PredictionTriple predict(const JointModel& model, const EncodedTriple& e) {
  check_encoded(model.params, e);
  return forward_heads(model.params.heads, e.cls, e.f1, e.f2);
}

PredictionTriple predict(const JointModel& model, const Example& ex) {
  return ex.encoded ? predict(model, *ex.encoded) : predict(model, ex.ids);
}

void adam_step(Params& params, const Params& grads, AdamState& state, const AdamConfig& cfg) {
  auto gt = grads.tensors();
  for (const auto& t : gt)
    for (double g : t.tensor->data)
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + t.name);
  auto pt = params.tensors();
  auto mt = state.m.tensors();
  auto vt = state.v.tensors();
  if (pt.size() != gt.size() || mt.size() != gt.size() || vt.size() != gt.size())
    throw NumericError("optimizer state does not mirror parameters");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < pt.size(); ++k) {
    auto& p = pt[k].tensor->data;
    const auto& g = gt[k].tensor->data;
    auto& m = mt[k].tensor->data;
    auto& v = vt[k].tensor->data;
    if (p.size() != g.size() || m.size() != g.size() || v.size() != g.size())
      throw NumericError("shape mismatch in " + pt[k].name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

std::optional<sbel::SbelStatement> decode(const PredictionTriple& t, const sbel::EntityRef& em1,
                                          const sbel::EntityRef& em2) {
  const auto rel = sbel::kAllRelations[argmax(t.rel)];
  if (rel == RelationType::None) return std::nullopt;
  sbel::SbelStatement s;
  s.func1 = sbel::kAllFunctions[argmax(t.f1)];
  s.em1 = em1;
  s.relation = rel;
  s.func2 = sbel::kAllFunctions[argmax(t.f2)];
  s.em2 = em2;
  return s;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("SBELKIT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace sbelkit::model
