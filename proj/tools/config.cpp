#include "config.hpp"

#include <set>

#include "sbelkit/io.hpp"

namespace sbelkit::cli {

namespace {

void check_keys(const ordered_json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items())
    if (!ok.contains(k)) throw ConfigError("unknown config key '" + (where.empty() ? k : where + "." + k) + "'");
}

template <typename T>
void read(const ordered_json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

void read_path(const ordered_json& j, const char* key, std::optional<fs::path>& out) {
  if (!j.contains(key)) return;
  if (!j[key].is_string()) throw ConfigError(std::string("config key '") + key + "' must be a path string");
  out = j[key].get<std::string>();
}

template <typename T>
void positive(T v, const char* key) {
  if (!(v > 0)) throw ConfigError(std::string("config key '") + key + "' must be positive");
}

}  // namespace

corpus::SynthSpec SynthOptions::spec() const {
  auto s = corpus::SynthSpec::defaults();
  s.sentences = sentences;
  s.function_rate = function_rate;
  s.label_noise = label_noise;
  s.id_prefix = id_prefix;
  return s;
}

const fs::path& RunConfig::require(const std::optional<fs::path>& p, const char* key) const {
  if (!p) throw ConfigError(std::string("no '") + key + "' path configured");
  return *p;
}

RunConfig parse_run_config(const ordered_json& j) {
  check_keys(j, "", {"corpus", "test_corpus", "vocab", "model", "function_model", "predictions", "encodings",
                     "output", "train", "generalization", "runs", "min_count", "levels", "synth", "seed"});
  RunConfig c;
  read_path(j, "corpus", c.corpus);
  read_path(j, "test_corpus", c.test_corpus);
  read_path(j, "vocab", c.vocab);
  read_path(j, "model", c.model);
  read_path(j, "function_model", c.function_model);
  read_path(j, "predictions", c.predictions);
  read_path(j, "encodings", c.encodings);
  std::optional<fs::path> out;
  read_path(j, "output", out);
  if (out) c.output = *out;
  read(j, "runs", c.runs, "");
  positive(c.runs, "runs");
  read(j, "min_count", c.min_count, "");
  read(j, "levels", c.levels, "");
  read(j, "seed", c.train.seed, "");

  if (j.contains("train")) {
    const auto& t = j["train"];
    check_keys(t, "train",
               {"batch_size", "epochs", "max_seq_len", "learning_rate", "beta1", "beta2", "epsilon", "dev_ratio",
                "function_weights", "weighting", "mask_function_loss_on_negative", "mode", "dim", "blocks",
                "ffn_mult", "negative_keep", "threads"});
    auto& tc = c.train;
    read(t, "batch_size", tc.batch_size, "train.");
    read(t, "epochs", tc.epochs, "train.");
    read(t, "max_seq_len", tc.max_seq_len, "train.");
    read(t, "learning_rate", tc.learning_rate, "train.");
    read(t, "beta1", tc.beta1, "train.");
    read(t, "beta2", tc.beta2, "train.");
    read(t, "epsilon", tc.epsilon, "train.");
    read(t, "dev_ratio", tc.dev_ratio, "train.");
    if (t.contains("function_weights")) {
      std::vector<double> w;
      read(t, "function_weights", w, "train.");
      if (w.size() != model::kNumFunctions)
        throw ConfigError("train.function_weights needs " + std::to_string(model::kNumFunctions) +
                          " entries (act, deg, pmod, sec, tloc, complex, None)");
      std::copy(w.begin(), w.end(), tc.function_weights.begin());
    }
    read(t, "weighting", tc.weighting, "train.");
    read(t, "mask_function_loss_on_negative", tc.mask_function_loss_on_negative, "train.");
    if (t.contains("mode")) {
      std::string m;
      read(t, "mode", m, "train.");
      try {
        tc.mode = train::mode_from(m);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
    }
    read(t, "dim", tc.dim, "train.");
    read(t, "blocks", tc.blocks, "train.");
    read(t, "ffn_mult", tc.ffn_mult, "train.");
    read(t, "negative_keep", tc.negative_keep, "train.");
    read(t, "threads", tc.threads, "train.");
  }
  try {
    c.train.validate();
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("generalization")) {
    const auto& g = j["generalization"];
    check_keys(g, "generalization", {"functions", "relations"});
    if (g.contains("functions")) {
      if (!g["functions"].is_object()) throw ConfigError("generalization.functions must be an object");
      for (const auto& [k, v] : g["functions"].items()) {
        const auto f = v.is_string() ? sbel::function_from(v.get<std::string>()) : std::nullopt;
        if (!f) throw ConfigError("generalization.functions." + k + " is not a function type");
        c.gmap.functions[k] = *f;
      }
    }
    if (g.contains("relations")) {
      if (!g["relations"].is_object()) throw ConfigError("generalization.relations must be an object");
      for (const auto& [k, v] : g["relations"].items()) {
        const auto r = v.is_string() ? sbel::relation_from(v.get<std::string>()) : std::nullopt;
        if (!r) throw ConfigError("generalization.relations." + k + " is not a relation type");
        c.gmap.relations[k] = *r;
      }
    }
  }

  if (j.contains("synth")) {
    const auto& s = j["synth"];
    check_keys(s, "synth", {"sentences", "test_sentences", "function_rate", "label_noise", "id_prefix"});
    read(s, "sentences", c.synth.sentences, "synth.");
    read(s, "test_sentences", c.synth.test_sentences, "synth.");
    read(s, "function_rate", c.synth.function_rate, "synth.");
    read(s, "label_noise", c.synth.label_noise, "synth.");
    read(s, "id_prefix", c.synth.id_prefix, "synth.");
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_run_config(j);
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  auto put = [&](const char* k, const std::optional<fs::path>& p) {
    if (p) j[k] = p->string();
  };
  put("corpus", corpus);
  put("test_corpus", test_corpus);
  put("vocab", vocab);
  put("model", model);
  put("function_model", function_model);
  put("predictions", predictions);
  put("encodings", encodings);
  j["output"] = output.string();
  j["seed"] = train.seed;
  ordered_json t;
  t["batch_size"] = train.batch_size;
  t["epochs"] = train.epochs;
  t["max_seq_len"] = train.max_seq_len;
  t["learning_rate"] = train.learning_rate;
  t["beta1"] = train.beta1;
  t["beta2"] = train.beta2;
  t["epsilon"] = train.epsilon;
  t["dev_ratio"] = train.dev_ratio;
  t["function_weights"] = train.function_weights;
  t["weighting"] = train.weighting;
  t["mask_function_loss_on_negative"] = train.mask_function_loss_on_negative;
  t["mode"] = std::string(train::to_string(train.mode));
  t["dim"] = train.dim;
  t["blocks"] = train.blocks;
  t["ffn_mult"] = train.ffn_mult;
  t["negative_keep"] = train.negative_keep;
  t["threads"] = train.threads;
  j["train"] = t;
  ordered_json g, gf = ordered_json::object(), gr = ordered_json::object();
  for (const auto& [k, v] : gmap.functions) gf[k] = std::string(sbel::to_string(v));
  for (const auto& [k, v] : gmap.relations) gr[k] = std::string(sbel::to_string(v));
  g["functions"] = gf;
  g["relations"] = gr;
  j["generalization"] = g;
  j["runs"] = runs;
  j["min_count"] = min_count;
  j["levels"] = levels;
  ordered_json s;
  s["sentences"] = synth.sentences;
  s["test_sentences"] = synth.test_sentences;
  s["function_rate"] = synth.function_rate;
  s["label_noise"] = synth.label_noise;
  s["id_prefix"] = synth.id_prefix;
  j["synth"] = s;
  return j;
}

}  // namespace sbelkit::cli
