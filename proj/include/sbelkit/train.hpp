#pragma once

// Mini-batch Adam training with per-epoch dev selection on SBEL-level F1.

#include <cstdint>
#include <string>
#include <vector>

#include "sbelkit/evaluator.hpp"
#include "sbelkit/instances.hpp"
#include "sbelkit/model.hpp"
#include "sbelkit/pipeline.hpp"
#include "sbelkit/rng.hpp"

namespace sbelkit::train {

enum class Mode { joint, separate };
std::string_view to_string(Mode m);
Mode mode_from(std::string_view s);

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t epochs = 3;
  std::size_t max_seq_len = 128;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double dev_ratio = 0.1;
  model::FunctionWeights function_weights = model::default_function_weights();
  // Off: every function weight is 1.
  bool weighting = true;
  bool mask_function_loss_on_negative = false;
  std::uint64_t seed = 0;
  Mode mode = Mode::joint;
  std::size_t dim = 64;
  std::size_t blocks = 1;
  std::size_t ffn_mult = 4;
  double negative_keep = 1.0;
  // 0 means model::worker_threads().
  std::size_t threads = 0;

  model::FunctionWeights effective_weights() const;
  model::ModelShape shape(std::size_t vocab_size) const;
  model::AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
  // Throws DataError on non-positive sizes or rates, or non-positive weights.
  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per instance
  double aux_loss = 0.0;    // function model loss in separate mode
  double dev_f1 = 0.0;
  double dev_loss = 0.0;    // mean per dev instance; breaks dev F1 ties
  bool operator==(const EpochLog&) const = default;
};

struct JointData {
  std::vector<instances::SbelInstance> train;
  std::vector<instances::SbelInstance> dev;
  std::vector<eval::ScopedSbel> dev_gold;
  const pipeline::EncodingTable* encodings = nullptr;
};

struct SeparateData {
  instances::SeparateInstances train;
  instances::SeparateInstances dev;
  std::vector<eval::ScopedSbel> dev_gold;
  const pipeline::EncodingTable* encodings = nullptr;
};

struct TrainResult {
  Mode mode = Mode::joint;
  // Joint model, or the relation model in separate mode.
  model::JointModel primary;
  // Function model, separate mode only.
  model::JointModel function;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0: the initial parameters
  double best_dev_f1 = 0.0;
  double best_dev_loss = 0.0;
  std::vector<std::string> warnings;
};

// One optimizer over one model and example set.
class EpochRunner {
 public:
  EpochRunner(model::JointModel& m, std::vector<model::Example> examples, model::LossTerms terms,
              const TrainConfig& cfg, std::uint64_t shuffle_seed);
  // Mean loss per instance over the epoch.
  double run_epoch();

 private:
  model::JointModel& model_;
  std::vector<model::Example> examples_;
  model::LossTerms terms_;
  TrainConfig cfg_;
  Rng rng_;
  model::AdamState adam_;
  model::Params grads_;
  model::BatchScratch scratch_;
  std::size_t threads_;
};

TrainResult train_joint(const JointData& data, std::size_t vocab_size, const TrainConfig& cfg);
TrainResult train_separate(const SeparateData& data, std::size_t vocab_size, const TrainConfig& cfg);

}  // namespace sbelkit::train
