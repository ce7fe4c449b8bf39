#pragma once

// Run configuration: a JSON object with a fixed schema. Unknown keys at any
// level are rejected.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbelkit/error.hpp"
#include "sbelkit/sbel.hpp"
#include "sbelkit/synth.hpp"
#include "sbelkit/train.hpp"

namespace sbelkit::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SynthOptions {
  std::size_t sentences = 500;
  std::size_t test_sentences = 100;
  double function_rate = 0.5;
  double label_noise = 0.0;
  std::string id_prefix = "S";

  corpus::SynthSpec spec() const;
};

struct RunConfig {
  std::optional<fs::path> corpus;
  std::optional<fs::path> test_corpus;
  std::optional<fs::path> vocab;
  std::optional<fs::path> model;
  std::optional<fs::path> function_model;
  std::optional<fs::path> predictions;
  std::optional<fs::path> encodings;
  fs::path output = "sbelkit-out";
  train::TrainConfig train;
  sbel::GeneralizationMap gmap = sbel::GeneralizationMap::defaults();
  std::size_t runs = 1;
  std::size_t min_count = 1;
  std::vector<std::string> levels;  // empty: all
  SynthOptions synth;

  std::uint64_t seed() const { return train.seed; }
  // Fails with ConfigError naming `key` when the path was not configured.
  const fs::path& require(const std::optional<fs::path>& p, const char* key) const;
  ordered_json to_json() const;
};

RunConfig parse_run_config(const ordered_json& j);
RunConfig load_run_config(const fs::path& path);

}  // namespace sbelkit::cli
