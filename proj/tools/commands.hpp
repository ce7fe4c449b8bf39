#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "sbelkit/evaluator.hpp"
#include "sbelkit/instances.hpp"
#include "sbelkit/model.hpp"
#include "sbelkit/pipeline.hpp"
#include "sbelkit/vocab.hpp"

namespace sbelkit::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

struct Io {
  std::ostream& out;
  std::ostream& err;
};

// A trained joint model, or a relation + function pair.
struct Models {
  std::optional<model::JointModel> joint;
  std::optional<model::JointModel> relation;
  std::optional<model::JointModel> function;
};

struct PredictionSet {
  std::vector<eval::ScopedSbel> sbel;
  std::vector<eval::ScopedBel> bel;
  std::size_t candidates = 0;  // mention pairs considered
  std::size_t scored = 0;      // pairs run through a model
  std::vector<instances::Provenance> skipped;
};

// Without models, gold labels are decoded as the predictions.
PredictionSet run_prediction(const Models* models, const corpus::Corpus& c, const vocab::Vocabulary& v,
                             const RunConfig& cfg, const pipeline::EncodingTable* enc = nullptr);

std::string sbel_jsonl(const std::vector<eval::ScopedSbel>& xs);
std::string bel_jsonl(const std::vector<eval::ScopedBel>& xs);
std::vector<eval::ScopedSbel> parse_sbel_jsonl(const std::string& content);
std::vector<eval::ScopedBel> parse_bel_jsonl(const std::string& content);

struct GradcheckFlags {
  std::size_t dim = 8;
  std::size_t blocks = 1;
  bool heads_only = false;
  bool unit_weights = false;
  bool corrupt_gradient = false;
  double tolerance = 1e-4;
};

int cmd_convert(const RunConfig& cfg, Io io);
int cmd_stats(const RunConfig& cfg, Io io);
int cmd_synth(const RunConfig& cfg, Io io);
int cmd_gen_instances(const RunConfig& cfg, Io io);
int cmd_train(const RunConfig& cfg, Io io);
int cmd_predict(const RunConfig& cfg, bool gold_labels, Io io);
int cmd_evaluate(const RunConfig& cfg, const std::vector<fs::path>& pred_dirs, bool table, Io io);
int cmd_pipeline(const RunConfig& cfg, Io io);
int cmd_gradcheck(const RunConfig& cfg, const GradcheckFlags& flags, Io io);

// Parses argv, dispatches, and maps exceptions to exit codes.
int run(int argc, char** argv, Io io);

}  // namespace sbelkit::cli
