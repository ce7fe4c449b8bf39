#pragma once

// Joint relation / entity-function classifier.
//
// A small post-LN transformer encoder stands in for a pretrained one:
// token embeddings plus fixed sinusoidal positions, then `blocks` blocks of
// single-head self-attention and a GELU feed-forward layer, each wrapped in
// a residual connection and layer normalization. Three softmax heads read
// the hidden states at [CLS], [F1] and [F2]:
//
//   rel = softmax(W_r h[CLS] + b_r)
//   f1  = softmax(W_f h[F1]  + b_f)
//   f2  = softmax(W_f h[F2]  + b_f)      (W_f, b_f shared)
//
// and training minimises, summed over the instances of a batch,
//
//   J = -log rel[y_r] - w[y_f1] log f1[y_f1] - w[y_f2] log f2[y_f2].
//
// All gradients are analytic; see gradcheck.hpp for the finite-difference
// harness that verifies them.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sbelkit/sbel.hpp"
#include "sbelkit/tensor.hpp"
#include "sbelkit/vocab.hpp"

namespace sbelkit::model {

using sbel::FunctionType;
using sbel::kNumFunctions;
using sbel::kNumRelations;
using sbel::RelationType;
using vocab::TokenId;

struct ModelShape {
  std::size_t vocab_size = 0;
  std::size_t dim = 64;
  std::size_t blocks = 1;
  std::size_t ffn_mult = 4;
  std::size_t max_seq_len = 128;

  std::size_t ffn_dim() const { return dim * ffn_mult; }
  bool operator==(const ModelShape&) const = default;
};

// Row vectors are stored as 1 x n matrices so every parameter is a Matrix.
struct Block {
  Matrix wq, wk, wv, wo;          // dim x dim, applied as x * W
  Matrix ln1_gain, ln1_bias;      // 1 x dim
  Matrix w1, b1;                  // dim x ffn, 1 x ffn
  Matrix w2, b2;                  // ffn x dim, 1 x dim
  Matrix ln2_gain, ln2_bias;      // 1 x dim
};

struct EncoderParams {
  Matrix embedding;  // vocab x dim
  std::vector<Block> blocks;
};

struct HeadParams {
  Matrix rel_weight;  // n_r x dim
  Matrix rel_bias;    // 1 x n_r
  Matrix fn_weight;   // n_f x dim, shared by both entity heads
  Matrix fn_bias;     // 1 x n_f
};

struct NamedTensor {
  std::string name;
  Matrix* tensor;
};
struct ConstNamedTensor {
  std::string name;
  const Matrix* tensor;
};

// Parameters, and with the same layout, their gradients and Adam moments.
struct Params {
  ModelShape shape;
  EncoderParams encoder;
  HeadParams heads;

  // Every tensor allocated and zero; layer-norm gains included (also zero).
  static Params zeros(const ModelShape& shape);

  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
  std::vector<NamedTensor> head_tensors();
  void zero();
  std::size_t parameter_count() const;
};

// Embeddings and all weight matrices uniform in +-1/sqrt(dim), biases 0,
// layer-norm gains 1.
Params init_params(const ModelShape& shape, std::uint64_t seed);

using FunctionWeights = std::array<double, kNumFunctions>;
FunctionWeights default_function_weights();  // None = 3, the rest 1
FunctionWeights unit_function_weights();

struct JointModel {
  Params params;
  FunctionWeights weights = default_function_weights();
  // Applies only when the relation term is trained.
  bool mask_function_loss_on_negative = false;
};

Matrix positional_encoding(std::size_t length, std::size_t dim);

// Hidden state per position. Rows 0, 1, 2 are the [CLS], [F1], [F2] views.
struct HiddenStates {
  Matrix h;
  std::span<const double> cls() const { return h.row(0); }
  std::span<const double> f1() const { return h.row(1); }
  std::span<const double> f2() const { return h.row(2); }
  std::size_t rows() const { return h.rows; }
};

HiddenStates encode(const Params& params, std::span<const TokenId> ids);

struct PredictionTriple {
  std::array<double, kNumRelations> rel{};
  std::array<double, kNumFunctions> f1{};
  std::array<double, kNumFunctions> f2{};
};

PredictionTriple forward_heads(const HeadParams& heads, std::span<const double> cls,
                               std::span<const double> f1, std::span<const double> f2);
PredictionTriple forward_heads(const HiddenStates& h, const HeadParams& heads);

struct Labels {
  RelationType rel = RelationType::None;
  FunctionType f1 = FunctionType::None;
  FunctionType f2 = FunctionType::None;
};

struct LabeledTriple {
  PredictionTriple pred;
  Labels gold;
};

inline constexpr double kProbClamp = 1e-12;

// Weighted joint cross-entropy over probability triples, clamping gold
// probabilities at kProbClamp. `weights` must have n_f entries.
double joint_loss(std::span<const LabeledTriple> batch, std::span<const double> weights,
                  bool mask_function_loss_on_negative = false);

// Which cross-entropy terms a model trains. The separate baseline uses a
// relation-only model and a function-only model (entity head 1).
struct LossTerms {
  bool relation = true;
  bool func1 = true;
  bool func2 = true;

  static LossTerms joint() { return {}; }
  static LossTerms relation_only() { return {true, false, false}; }
  static LossTerms function_only() { return {false, true, false}; }
};

// Externally computed [CLS], [F1], [F2] vectors; bypasses the encoder.
struct EncodedTriple {
  std::vector<double> cls, f1, f2;
};

struct Example {
  std::span<const TokenId> ids;
  const EncodedTriple* encoded = nullptr;
  Labels labels;
};

// Loss of one example computed from logits (log-softmax, no clamp), with
// its gradient added into `grads`.
double accumulate_gradient(const JointModel& model, const Example& ex, const LossTerms& terms,
                           Params& grads);

// Per-example gradient buffers reused across batches.
struct BatchScratch {
  std::vector<Params> slots;
};

// Sum of losses and gradients over a batch, added into `grads`. Each
// example gets its own buffer and buffers are reduced in example order, so
// the result does not depend on `threads`.
double batch_gradient(const JointModel& model, std::span<const Example> batch, const LossTerms& terms,
                      Params& grads, std::size_t threads = 1, BatchScratch* scratch = nullptr);

double example_loss(const JointModel& model, const Example& ex, const LossTerms& terms);

PredictionTriple predict(const JointModel& model, std::span<const TokenId> ids);
PredictionTriple predict(const JointModel& model, const EncodedTriple& encoded);
PredictionTriple predict(const JointModel& model, const Example& ex);

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Params m;
  Params v;
  std::uint64_t step = 0;

  static AdamState for_params(const Params& p) { return {Params::zeros(p.shape), Params::zeros(p.shape), 0}; }
};

// Bias-corrected Adam. Throws NumericError on a non-finite gradient before
// touching anything.
void adam_step(Params& params, const Params& grads, AdamState& state, const AdamConfig& cfg);

// Argmax per distribution, ties to the earlier label. No statement when the
// relation argmax is None.
std::optional<sbel::SbelStatement> decode(const PredictionTriple& t, const sbel::EntityRef& em1,
                                          const sbel::EntityRef& em2);

template <std::size_t N>
std::size_t argmax(const std::array<double, N>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < N; ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

// Number of worker threads: SBELKIT_THREADS if set, else the hardware
// concurrency.
std::size_t worker_threads();
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace sbelkit::model
