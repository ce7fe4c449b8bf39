#include "sbelkit/train.hpp"

#include <algorithm>
#include <cmath>

#include "sbelkit/error.hpp"

namespace sbelkit::train {

std::string_view to_string(Mode m) { return m == Mode::joint ? "joint" : "separate"; }

Mode mode_from(std::string_view s) {
  if (s == "joint") return Mode::joint;
  if (s == "separate") return Mode::separate;
  throw DataError("unknown mode '" + std::string(s) + "' (expected joint or separate)");
}

model::FunctionWeights TrainConfig::effective_weights() const {
  return weighting ? function_weights : model::unit_function_weights();
}

model::ModelShape TrainConfig::shape(std::size_t vocab_size) const {
  return {vocab_size, dim, blocks, ffn_mult, max_seq_len};
}

void TrainConfig::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw DataError(std::string(what) + " must be positive");
  };
  positive(batch_size > 0, "batch_size");
  positive(max_seq_len >= 3, "max_seq_len");
  positive(learning_rate > 0, "learning_rate");
  positive(dim > 0 && blocks > 0 && ffn_mult > 0, "model dimensions");
  positive(epsilon > 0, "epsilon");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw DataError("Adam betas must lie in [0, 1)");
  if (!(dev_ratio > 0 && dev_ratio < 1)) throw DataError("dev_ratio must lie in (0, 1)");
  if (!(negative_keep > 0 && negative_keep <= 1)) throw DataError("negative_keep must lie in (0, 1]");
  for (double w : function_weights)
    if (!(w > 0) || !std::isfinite(w)) throw DataError("function weights must be positive");
}

EpochRunner::EpochRunner(model::JointModel& m, std::vector<model::Example> examples, model::LossTerms terms,
                         const TrainConfig& cfg, std::uint64_t shuffle_seed)
    : model_(m),
      examples_(std::move(examples)),
      terms_(terms),
      cfg_(cfg),
      rng_(shuffle_seed),
      adam_(model::AdamState::for_params(m.params)),
      grads_(model::Params::zeros(m.params.shape)),
      threads_(cfg.threads ? cfg.threads : model::worker_threads()) {}

double EpochRunner::run_epoch() {
  rng_.shuffle(examples_);
  double total = 0.0;
  for (std::size_t start = 0; start < examples_.size(); start += cfg_.batch_size) {
    const std::size_t n = std::min(cfg_.batch_size, examples_.size() - start);
    grads_.zero();
    total += model::batch_gradient(model_, std::span(examples_).subspan(start, n), terms_, grads_, threads_,
                                   &scratch_);
    model::adam_step(model_.params, grads_, adam_, cfg_.adam());
  }
  if (!std::isfinite(total)) throw NumericError("training loss diverged");
  return examples_.empty() ? 0.0 : total / static_cast<double>(examples_.size());
}

namespace {

model::JointModel fresh_model(std::size_t vocab_size, const TrainConfig& cfg, std::uint64_t seed) {
  return {model::init_params(cfg.shape(vocab_size), seed), cfg.effective_weights(),
          cfg.mask_function_loss_on_negative};
}

constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kFunctionSalt = 0xc2b2ae3d27d4eb4fULL;

// Mean loss on dev predictions under the model's own loss terms.
double dev_loss(const model::JointModel& m, const std::vector<model::Example>& xs,
                const std::vector<model::PredictionTriple>& preds, model::LossTerms terms) {
  if (xs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& g = xs[i].labels;
    const auto& p = preds[i];
    const bool fn = !(terms.relation && m.mask_function_loss_on_negative && g.rel == sbel::RelationType::None);
    if (terms.relation) total -= std::log(std::max(p.rel[sbel::index(g.rel)], model::kProbClamp));
    if (terms.func1 && fn)
      total -= m.weights[sbel::index(g.f1)] * std::log(std::max(p.f1[sbel::index(g.f1)], model::kProbClamp));
    if (terms.func2 && fn)
      total -= m.weights[sbel::index(g.f2)] * std::log(std::max(p.f2[sbel::index(g.f2)], model::kProbClamp));
  }
  return total / static_cast<double>(xs.size());
}

// Higher dev F1 wins; equal F1 goes to the lower dev loss, then the earlier
// epoch.
bool improves(const EpochLog& e, const TrainResult& r) {
  if (e.dev_f1 != r.best_dev_f1) return e.dev_f1 > r.best_dev_f1;
  return e.dev_loss < r.best_dev_loss;
}

template <typename Instances>
void warn_if_all_negative(const Instances& xs, TrainResult& r) {
  const bool any = std::any_of(xs.begin(), xs.end(), [](const auto& x) {
    if constexpr (requires { x.rel_label; })
      return x.rel_label != sbel::RelationType::None;
    else
      return x.label != sbel::RelationType::None;
  });
  if (!any) r.warnings.push_back("training set has no positive relation instances");
}

}  // namespace

TrainResult train_joint(const JointData& data, std::size_t vocab_size, const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty()) throw DataError("empty training set");
  TrainResult r;
  r.mode = Mode::joint;
  warn_if_all_negative(data.train, r);
  model::JointModel m = fresh_model(vocab_size, cfg, cfg.seed);
  r.primary = m;
  if (cfg.epochs == 0) return r;

  const auto dev = pipeline::joint_examples(data.dev, data.encodings);
  EpochRunner runner(m, pipeline::joint_examples(data.train, data.encodings), model::LossTerms::joint(), cfg,
                     cfg.seed ^ kShuffleSalt);
  const std::size_t threads = cfg.threads ? cfg.threads : model::worker_threads();
  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = runner.run_epoch();
    if (!dev.empty()) {
      const auto probs = pipeline::predict_all(m, dev, threads);
      e.dev_f1 = eval::eval_sbel(pipeline::decode_joint(data.dev, probs), data.dev_gold).prf.f1;
      e.dev_loss = dev_loss(m, dev, probs, model::LossTerms::joint());
    }
    r.log.push_back(e);
    // Without dev data the last epoch wins.
    if (!have_best || improves(e, r) || dev.empty()) {
      have_best = true;
      r.best_epoch = epoch;
      r.best_dev_f1 = e.dev_f1;
      r.best_dev_loss = e.dev_loss;
      r.primary = m;
    }
  }
  return r;
}

TrainResult train_separate(const SeparateData& data, std::size_t vocab_size, const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.relation_instances.empty() || data.train.function_instances.empty())
    throw DataError("empty training set");
  TrainResult r;
  r.mode = Mode::separate;
  warn_if_all_negative(data.train.relation_instances, r);
  model::JointModel rel = fresh_model(vocab_size, cfg, cfg.seed);
  model::JointModel fn = fresh_model(vocab_size, cfg, cfg.seed ^ kFunctionSalt);
  r.primary = rel;
  r.function = fn;
  if (cfg.epochs == 0) return r;

  const auto dev_rel = pipeline::relation_examples(data.dev.relation_instances, data.encodings);
  const auto dev_fn = pipeline::function_examples(data.dev.function_instances, data.encodings);
  EpochRunner rel_runner(rel, pipeline::relation_examples(data.train.relation_instances, data.encodings),
                         model::LossTerms::relation_only(), cfg, cfg.seed ^ kShuffleSalt);
  EpochRunner fn_runner(fn, pipeline::function_examples(data.train.function_instances, data.encodings),
                        model::LossTerms::function_only(), cfg, cfg.seed ^ kShuffleSalt ^ kFunctionSalt);
  const std::size_t threads = cfg.threads ? cfg.threads : model::worker_threads();
  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = rel_runner.run_epoch();
    e.aux_loss = fn_runner.run_epoch();
    if (!dev_rel.empty()) {
      const auto rel_probs = pipeline::predict_all(rel, dev_rel, threads);
      const auto fn_probs = pipeline::predict_all(fn, dev_fn, threads);
      const auto pred = pipeline::decode_separate(data.dev.relation_instances, rel_probs,
                                                  data.dev.function_instances, fn_probs);
      e.dev_f1 = eval::eval_sbel(pred, data.dev_gold).prf.f1;
      e.dev_loss = dev_loss(rel, dev_rel, rel_probs, model::LossTerms::relation_only()) +
                   dev_loss(fn, dev_fn, fn_probs, model::LossTerms::function_only());
    }
    r.log.push_back(e);
    if (!have_best || improves(e, r) || dev_rel.empty()) {
      have_best = true;
      r.best_epoch = epoch;
      r.best_dev_f1 = e.dev_f1;
      r.best_dev_loss = e.dev_loss;
      r.primary = rel;
      r.function = fn;
    }
  }
  return r;
}

}  // namespace sbelkit::train
