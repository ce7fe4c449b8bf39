#include "commands.hpp"

#include <chrono>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sbelkit/archive.hpp"
#include "sbelkit/corpus.hpp"
#include "sbelkit/gradcheck.hpp"
#include "sbelkit/io.hpp"
#include "sbelkit/synth.hpp"
#include "sbelkit/train.hpp"

namespace sbelkit::cli {

namespace {

using Clock = std::chrono::steady_clock;

void write_json(const fs::path& path, const ordered_json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ordered_json stats_json(const corpus::CorpusStats& s) {
  ordered_json j;
  j["sentences"] = s.sentences;
  j["bel_statements"] = s.bel_statements;
  j["sbel_statements"] = s.sbel_statements;
  j["relations"] = s.relations;
  ordered_json r = ordered_json::object();
  for (auto t : sbel::kAllRelations)
    if (t != sbel::RelationType::None) r[std::string(sbel::to_string(t))] = s.relation_counts.contains(t) ? s.relation_counts.at(t) : 0;
  j["relation_counts"] = r;
  j["functions"] = s.functions;
  ordered_json f = ordered_json::object();
  for (auto t : sbel::kAllFunctions)
    if (t != sbel::FunctionType::None) f[std::string(sbel::to_string(t))] = s.function_counts.contains(t) ? s.function_counts.at(t) : 0;
  j["function_counts"] = f;
  return j;
}

std::string stats_table(const corpus::CorpusStats& sep, const corpus::CorpusStats& joint) {
  std::ostringstream o;
  auto row = [&](const std::string& name, std::size_t a, std::size_t b) {
    o << name << std::string(name.size() < 18 ? 18 - name.size() : 1, ' ') << a << "\t" << b << '\n';
  };
  o << "                  separate\tjoint\n";
  row("sentences", sep.sentences, joint.sentences);
  row("BEL statements", sep.bel_statements, joint.bel_statements);
  row("SBEL statements", sep.sbel_statements, joint.sbel_statements);
  row("relations", sep.relations, joint.relations);
  for (auto t : {sbel::RelationType::increases, sbel::RelationType::decreases}) {
    auto get = [&](const corpus::CorpusStats& s) { return s.relation_counts.contains(t) ? s.relation_counts.at(t) : 0; };
    row("  " + std::string(sbel::to_string(t)), get(sep), get(joint));
  }
  row("functions", sep.functions, joint.functions);
  for (auto t : sbel::kAllFunctions) {
    if (t == sbel::FunctionType::None) continue;
    auto get = [&](const corpus::CorpusStats& s) { return s.function_counts.contains(t) ? s.function_counts.at(t) : 0; };
    row("  " + std::string(sbel::to_string(t)), get(sep), get(joint));
  }
  return o.str();
}

instances::InstanceConfig instance_config(const RunConfig& cfg, bool training) {
  instances::InstanceConfig ic;
  ic.max_seq_len = cfg.train.max_seq_len;
  ic.negative_keep = training ? cfg.train.negative_keep : 1.0;
  ic.seed = cfg.seed();
  ic.gmap = cfg.gmap;
  return ic;
}

ordered_json sbel_record(const eval::ScopedSbel& s) {
  ordered_json j;
  j["sen_id"] = s.scope;
  j["func1"] = std::string(sbel::to_string(s.stmt.func1));
  j["em1"] = sbel::to_string(s.stmt.em1);
  j["relation"] = std::string(sbel::to_string(s.stmt.relation));
  j["func2"] = std::string(sbel::to_string(s.stmt.func2));
  j["em2"] = sbel::to_string(s.stmt.em2);
  return j;
}

std::string keys_of(const std::vector<instances::Provenance>& xs) {
  std::string out;
  for (const auto& p : xs) out += (out.empty() ? "" : ", ") + p.key();
  return out;
}

std::vector<eval::LevelReport> filter_levels(std::vector<eval::LevelReport> reports, const std::vector<std::string>& levels) {
  if (levels.empty()) return reports;
  for (const auto& l : levels) {
    bool known = false;
    for (auto lv : eval::kAllLevels) known |= eval::level_name(lv) == l;
    if (!known) throw ConfigError("unknown evaluation level '" + l + "'");
  }
  std::vector<eval::LevelReport> out;
  for (auto& r : reports)
    if (std::find(levels.begin(), levels.end(), r.level) != levels.end()) out.push_back(std::move(r));
  return out;
}

std::vector<eval::LevelReport> score(const PredictionSet& p, const corpus::Corpus& gold_corpus, const RunConfig& cfg) {
  const auto gold = pipeline::gold_sbel(gold_corpus, cfg.gmap);
  return filter_levels(eval::evaluate_all(p.sbel, gold, p.bel, pipeline::assemble(gold)), cfg.levels);
}

ordered_json prediction_counts(const PredictionSet& p) {
  ordered_json j;
  j["candidates"] = p.candidates;
  j["scored"] = p.scored;
  j["skipped"] = p.skipped.size();
  ordered_json keys = ordered_json::array();
  for (const auto& s : p.skipped) keys.push_back(s.key());
  j["skipped_instances"] = keys;
  j["sbel_predictions"] = p.sbel.size();
  j["bel_predictions"] = p.bel.size();
  return j;
}

void write_predictions(const fs::path& dir, const PredictionSet& p) {
  io::write_file_atomic(dir / "predictions.sbel.jsonl", sbel_jsonl(p.sbel));
  io::write_file_atomic(dir / "predictions.bel.jsonl", bel_jsonl(p.bel));
}

std::optional<pipeline::EncodingTable> maybe_encodings(const RunConfig& cfg) {
  if (!cfg.encodings) return std::nullopt;
  return pipeline::load_encodings(*cfg.encodings, cfg.train.dim);
}

struct TrainedRun {
  Models models;
  train::TrainResult result;
  std::vector<eval::LevelReport> dev_report;
};

// Trains one seed on train/dev corpora and scores the selected snapshot on dev.
TrainedRun train_one(const RunConfig& cfg, std::uint64_t seed, const corpus::Corpus& train_c,
                     const corpus::Corpus& dev_c, const vocab::Vocabulary& v, const pipeline::EncodingTable* enc,
                     Io io) {
  RunConfig run_cfg = cfg;
  run_cfg.train.seed = seed;
  vocab::Tokenizer tok;
  std::vector<instances::Provenance> skipped;
  TrainedRun out;
  const auto dev_gold = pipeline::gold_sbel(dev_c, cfg.gmap);
  if (cfg.train.mode == train::Mode::joint) {
    train::JointData d;
    d.train = instances::joint_instances(train_c, v, tok, instance_config(run_cfg, true), &skipped);
    d.dev = instances::joint_instances(dev_c, v, tok, instance_config(run_cfg, false), &skipped);
    d.dev_gold = dev_gold;
    d.encodings = enc;
    out.result = train::train_joint(d, v.size(), run_cfg.train);
    out.models.joint = out.result.primary;
  } else {
    train::SeparateData d;
    d.train = instances::separate_instances(train_c, v, tok, instance_config(run_cfg, true), &skipped);
    d.dev = instances::separate_instances(dev_c, v, tok, instance_config(run_cfg, false), &skipped);
    d.dev_gold = dev_gold;
    d.encodings = enc;
    out.result = train::train_separate(d, v.size(), run_cfg.train);
    out.models.relation = out.result.primary;
    out.models.function = out.result.function;
  }
  if (!skipped.empty()) io.err << "warning: skipped " << skipped.size() << " over-long instances\n";
  for (const auto& w : out.result.warnings) io.err << "warning: " << w << '\n';
  out.dev_report = score(run_prediction(&out.models, dev_c, v, run_cfg, enc), dev_c, run_cfg);
  return out;
}

ordered_json log_json(const train::TrainResult& r) {
  ordered_json j;
  j["mode"] = std::string(train::to_string(r.mode));
  j["best_epoch"] = r.best_epoch;
  j["best_dev_f1"] = r.best_dev_f1;
  j["best_dev_loss"] = r.best_dev_loss;
  ordered_json epochs = ordered_json::array();
  for (const auto& e : r.log) {
    ordered_json x;
    x["epoch"] = e.epoch;
    x["train_loss"] = e.train_loss;
    if (r.mode == train::Mode::separate) x["function_loss"] = e.aux_loss;
    x["dev_sbel_f1"] = e.dev_f1;
    x["dev_loss"] = e.dev_loss;
    epochs.push_back(x);
  }
  j["epochs"] = epochs;
  j["warnings"] = r.warnings;
  return j;
}

void save_models(const fs::path& dir, const Models& m, const vocab::Vocabulary& v, const ordered_json& config) {
  auto save = [&](const char* file, const char* role, const model::JointModel& jm) {
    archive::ModelArchive a{role, jm, v, config};
    archive::save_model(dir / file, a);
  };
  if (m.joint) save("model.sbk", "joint", *m.joint);
  if (m.relation) save("relation.sbk", "relation", *m.relation);
  if (m.function) save("function.sbk", "function", *m.function);
}

vocab::Vocabulary vocabulary_for(const RunConfig& cfg, const corpus::Corpus& c) {
  return cfg.vocab ? vocab::Vocabulary::load(*cfg.vocab) : vocab::build_vocabulary(c, cfg.min_count);
}

ordered_json with_config(const RunConfig& cfg, ordered_json j) {
  j["config"] = cfg.to_json();
  return j;
}

}  // namespace

PredictionSet run_prediction(const Models* models, const corpus::Corpus& c, const vocab::Vocabulary& v,
                             const RunConfig& cfg, const pipeline::EncodingTable* enc) {
  PredictionSet out;
  vocab::Tokenizer tok;
  const auto ic = instance_config(cfg, false);
  const std::size_t threads = cfg.train.threads ? cfg.train.threads : model::worker_threads();
  const bool separate = models ? !models->joint.has_value() : cfg.train.mode == train::Mode::separate;
  if (!separate) {
    const auto xs = instances::joint_instances(c, v, tok, ic, &out.skipped);
    const auto ex = pipeline::joint_examples(xs, enc);
    const auto triples = models ? pipeline::predict_all(*models->joint, ex, threads) : pipeline::gold_triples(ex);
    out.sbel = pipeline::decode_joint(xs, triples);
    out.scored = xs.size();
  } else {
    if (models && (!models->relation || !models->function))
      throw DataError("separate prediction needs both a relation and a function model");
    const auto xs = instances::separate_instances(c, v, tok, ic, &out.skipped);
    const auto rex = pipeline::relation_examples(xs.relation_instances, enc);
    const auto fex = pipeline::function_examples(xs.function_instances, enc);
    const auto rt = models ? pipeline::predict_all(*models->relation, rex, threads) : pipeline::gold_triples(rex);
    const auto ft = models ? pipeline::predict_all(*models->function, fex, threads) : pipeline::gold_triples(fex);
    out.sbel = pipeline::decode_separate(xs.relation_instances, rt, xs.function_instances, ft);
    out.scored = xs.relation_instances.size();
    // Function-instance skips have no second mention; only pair skips count here.
    std::erase_if(out.skipped, [](const instances::Provenance& p) { return p.em2.empty(); });
  }
  out.candidates = out.scored + out.skipped.size();
  out.bel = pipeline::assemble(out.sbel);
  return out;
}

std::string sbel_jsonl(const std::vector<eval::ScopedSbel>& xs) {
  std::string out;
  for (const auto& s : xs) out += sbel_record(s).dump() + "\n";
  return out;
}

std::string bel_jsonl(const std::vector<eval::ScopedBel>& xs) {
  std::string out;
  for (const auto& s : xs) {
    ordered_json j;
    j["sen_id"] = s.scope;
    j["bel"] = bel::serialize_bel(s.stmt);
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

template <typename F>
void for_each_record(const std::string& content, F&& f) {
  std::istringstream in(content);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(n, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(n, e.what());
    }
  }
}

}  // namespace

std::vector<eval::ScopedSbel> parse_sbel_jsonl(const std::string& content) {
  std::vector<eval::ScopedSbel> out;
  for_each_record(content, [&](const nlohmann::json& j) {
    auto func = [&](const char* k) {
      auto f = sbel::function_from(j.at(k).get<std::string>());
      if (!f) throw DataError(std::string("bad function in ") + k);
      return *f;
    };
    eval::ScopedSbel s;
    s.scope = j.at("sen_id").get<std::string>();
    s.stmt.func1 = func("func1");
    s.stmt.em1 = sbel::parse_entity_ref(j.at("em1").get<std::string>());
    const auto r = sbel::relation_from(j.at("relation").get<std::string>());
    if (!r) throw DataError("bad relation");
    s.stmt.relation = *r;
    s.stmt.func2 = func("func2");
    s.stmt.em2 = sbel::parse_entity_ref(j.at("em2").get<std::string>());
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<eval::ScopedBel> parse_bel_jsonl(const std::string& content) {
  std::vector<eval::ScopedBel> out;
  for_each_record(content, [&](const nlohmann::json& j) {
    out.push_back({j.at("sen_id").get<std::string>(), bel::parse_bel(j.at("bel").get<std::string>())});
  });
  return out;
}

int cmd_convert(const RunConfig& cfg, Io io) {
  const auto c = corpus::load_corpus(cfg.require(cfg.corpus, "corpus"));
  std::string dump;
  std::vector<std::string> failures;
  corpus::Corpus converted;
  for (const auto& s : c) {
    try {
      for (const auto& g : corpus::gold_sbels(s, cfg.gmap)) {
        auto rec = sbel_record({s.sen_id, g.stmt});
        rec["stmt_id"] = g.stmt_id;
        rec["sbel"] = sbel::to_string(g.stmt);
        dump += rec.dump() + "\n";
      }
      converted.push_back(s);
    } catch (const DataError& e) {
      failures.push_back(e.what());
    }
  }
  for (const auto& f : failures) io.err << "conversion error: " << f << '\n';
  if (!failures.empty()) throw DataError(std::to_string(failures.size()) + " sentence(s) failed to convert");

  fs::create_directories(cfg.output);
  io::write_file_atomic(cfg.output / "sbel.jsonl", dump);
  const auto sep = corpus::corpus_stats(converted, corpus::CountingScheme::separate, cfg.gmap);
  const auto joint = corpus::corpus_stats(converted, corpus::CountingScheme::joint, cfg.gmap);
  ordered_json j;
  j["separate"] = stats_json(sep);
  j["joint"] = stats_json(joint);
  write_json(cfg.output / "stats.json", with_config(cfg, j));
  io.out << joint.sbel_statements << " SBEL statements written to " << (cfg.output / "sbel.jsonl").string() << "\n\n"
         << stats_table(sep, joint);
  return kOk;
}

int cmd_stats(const RunConfig& cfg, Io io) {
  const auto c = corpus::load_corpus(cfg.require(cfg.corpus, "corpus"));
  const auto sep = corpus::corpus_stats(c, corpus::CountingScheme::separate, cfg.gmap);
  const auto joint = corpus::corpus_stats(c, corpus::CountingScheme::joint, cfg.gmap);
  ordered_json j;
  j["separate"] = stats_json(sep);
  j["joint"] = stats_json(joint);
  io.out << j.dump(2) << '\n';
  return kOk;
}

int cmd_synth(const RunConfig& cfg, Io io) {
  auto spec = cfg.synth.spec();
  spec.sentences = cfg.synth.sentences + cfg.synth.test_sentences;
  const auto all = corpus::synth_corpus(spec, cfg.seed());
  const corpus::Corpus train_c(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.synth.sentences));
  const corpus::Corpus test_c(all.begin() + static_cast<std::ptrdiff_t>(cfg.synth.sentences), all.end());
  fs::create_directories(cfg.output);
  corpus::save_corpus(cfg.output / "train.jsonl", train_c);
  corpus::save_corpus(cfg.output / "test.jsonl", test_c);
  io.out << "wrote " << train_c.size() << " training and " << test_c.size() << " test sentences to "
         << cfg.output.string() << '\n';
  return kOk;
}

int cmd_gen_instances(const RunConfig& cfg, Io io) {
  const auto c = corpus::load_corpus(cfg.require(cfg.corpus, "corpus"));
  const auto v = vocabulary_for(cfg, c);
  vocab::Tokenizer tok;
  std::vector<instances::Provenance> skipped;
  fs::create_directories(cfg.output);
  v.save(cfg.output / "vocab.txt");
  ordered_json report;
  if (cfg.train.mode == train::Mode::joint) {
    const auto xs = instances::joint_instances(c, v, tok, instance_config(cfg, true), &skipped);
    io::write_file_atomic(cfg.output / "instances.jsonl", instances::dump_jsonl(xs));
    report["instances"] = xs.size();
  } else {
    const auto xs = instances::separate_instances(c, v, tok, instance_config(cfg, true), &skipped);
    std::string rel, fn;
    for (const auto& x : xs.relation_instances) {
      ordered_json j;
      j["sen_id"] = x.provenance.sen_id;
      j["em1"] = x.provenance.em1;
      j["em2"] = x.provenance.em2;
      j["tokens"] = x.sequence.tokens;
      j["ids"] = x.sequence.ids;
      j["relation"] = std::string(sbel::to_string(x.label));
      rel += j.dump() + "\n";
    }
    for (const auto& x : xs.function_instances) {
      ordered_json j;
      j["sen_id"] = x.provenance.sen_id;
      j["em1"] = x.provenance.em1;
      j["tokens"] = x.sequence.tokens;
      j["ids"] = x.sequence.ids;
      j["function"] = std::string(sbel::to_string(x.label));
      fn += j.dump() + "\n";
    }
    io::write_file_atomic(cfg.output / "relation_instances.jsonl", rel);
    io::write_file_atomic(cfg.output / "function_instances.jsonl", fn);
    report["relation_instances"] = xs.relation_instances.size();
    report["function_instances"] = xs.function_instances.size();
  }
  ordered_json keys = ordered_json::array();
  for (const auto& s : skipped) keys.push_back(s.key());
  report["skipped"] = keys;
  write_json(cfg.output / "instances_report.json", with_config(cfg, report));
  io.out << report.dump(2) << '\n';
  if (!skipped.empty()) io.err << "warning: skipped over-long instances: " << keys_of(skipped) << '\n';
  return kOk;
}

int cmd_train(const RunConfig& cfg, Io io) {
  const auto c = corpus::load_corpus(cfg.require(cfg.corpus, "corpus"));
  auto [train_c, dev_c] = corpus::split_train_dev(c, cfg.train.dev_ratio, cfg.seed());
  const auto v = vocabulary_for(cfg, train_c);
  const auto enc = maybe_encodings(cfg);
  fs::create_directories(cfg.output);
  v.save(cfg.output / "vocab.txt");

  std::vector<std::vector<eval::LevelReport>> reports;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const std::uint64_t seed = cfg.seed() + r;
    TrainedRun run;
    try {
      run = train_one(cfg, seed, train_c, dev_c, v, enc ? &*enc : nullptr, io);
    } catch (const NumericError& e) {
      throw NumericError("training run " + std::to_string(r) + " (seed " + std::to_string(seed) + "): " + e.what());
    } catch (const DataError& e) {
      throw DataError("training run " + std::to_string(r) + " (seed " + std::to_string(seed) + "): " + e.what());
    }
    const fs::path dir = cfg.output / ("run" + std::to_string(r));
    fs::create_directories(dir);
    auto echo = cfg.to_json();
    echo["seed"] = seed;
    save_models(dir, run.models, v, echo);
    write_json(dir / "train_log.json", log_json(run.result));
    io::write_file_atomic(dir / "dev_report.json", eval::report_json(run.dev_report) + "\n");
    io.out << "run " << r << " (seed " << seed << "): best epoch " << run.result.best_epoch << ", dev SBEL F1 "
           << run.result.best_dev_f1 << '\n';
    reports.push_back(std::move(run.dev_report));
  }
  const auto agg = eval::aggregate_runs(reports);
  io::write_file_atomic(cfg.output / "aggregate.json", eval::aggregate_json(agg) + "\n");
  io.out << eval::render_table(agg);
  return kOk;
}

namespace {

struct LoadedModels {
  Models models;
  std::optional<vocab::Vocabulary> vocab;
};

LoadedModels load_models(const RunConfig& cfg) {
  LoadedModels out;
  auto a = archive::load_model(cfg.require(cfg.model, "model"));
  out.vocab = a.vocab;
  if (a.role == "joint") {
    out.models.joint = std::move(a.model);
  } else if (a.role == "relation") {
    out.models.relation = std::move(a.model);
    auto f = archive::load_model(cfg.require(cfg.function_model, "function_model"));
    if (f.role != "function") throw DataError("function_model archive has role '" + f.role + "'");
    out.models.function = std::move(f.model);
  } else {
    throw DataError("model archive has role '" + a.role + "'; expected joint or relation");
  }
  return out;
}

}  // namespace

int cmd_predict(const RunConfig& cfg, bool gold_labels, Io io) {
  const auto t0 = Clock::now();
  const auto c = corpus::load_corpus(cfg.require(cfg.corpus, "corpus"));
  LoadedModels lm;
  if (!gold_labels) lm = load_models(cfg);
  vocab::Vocabulary v = lm.vocab ? *lm.vocab : vocabulary_for(cfg, c);
  const auto enc = maybe_encodings(cfg);
  const auto p = run_prediction(gold_labels ? nullptr : &lm.models, c, v, cfg, enc ? &*enc : nullptr);
  fs::create_directories(cfg.output);
  write_predictions(cfg.output, p);
  ordered_json report;
  report["source"] = gold_labels ? "gold-labels" : "model";
  report["counts"] = prediction_counts(p);
  report["seconds"] = seconds_since(t0);
  write_json(cfg.output / "predict_report.json", with_config(cfg, report));
  if (!p.skipped.empty()) io.err << "warning: skipped over-long instances: " << keys_of(p.skipped) << '\n';
  io.out << p.sbel.size() << " SBEL and " << p.bel.size() << " BEL predictions from " << p.scored << " of "
         << p.candidates << " candidate pairs\n";
  return kOk;
}

int cmd_evaluate(const RunConfig& cfg, const std::vector<fs::path>& pred_dirs, bool table, Io io) {
  std::vector<fs::path> dirs = pred_dirs;
  if (dirs.empty()) dirs.push_back(cfg.require(cfg.predictions, "predictions"));
  const auto gold_c = corpus::load_corpus(cfg.require(cfg.corpus, "corpus"));
  const auto gold = pipeline::gold_sbel(gold_c, cfg.gmap);
  const auto gold_bel = pipeline::assemble(gold);

  std::vector<std::vector<eval::LevelReport>> runs;
  for (const auto& d : dirs) {
    const auto sb = parse_sbel_jsonl(io::read_file(d / "predictions.sbel.jsonl"));
    const auto bl = parse_bel_jsonl(io::read_file(d / "predictions.bel.jsonl"));
    runs.push_back(filter_levels(eval::evaluate_all(sb, gold, bl, gold_bel), cfg.levels));
  }
  fs::create_directories(cfg.output);
  io::write_file_atomic(cfg.output / "report.json", eval::report_json(runs.front()) + "\n");
  if (runs.size() > 1) {
    const auto agg = eval::aggregate_runs(runs);
    io::write_file_atomic(cfg.output / "aggregate.json", eval::aggregate_json(agg) + "\n");
    io.out << (table ? eval::render_table(agg) : eval::aggregate_json(agg)) << '\n';
  } else {
    io.out << (table ? eval::render_table(runs.front()) : eval::report_json(runs.front())) << '\n';
  }
  return kOk;
}

int cmd_pipeline(const RunConfig& cfg, Io io) {
  ordered_json stages = ordered_json::array();
  auto stage = [&](const char* name, Clock::time_point t0, ordered_json counts) {
    ordered_json s;
    s["stage"] = name;
    s["seconds"] = seconds_since(t0);
    s["counts"] = std::move(counts);
    stages.push_back(std::move(s));
  };

  auto t0 = Clock::now();
  corpus::Corpus train_all, test_c;
  if (cfg.corpus) {
    train_all = corpus::load_corpus(*cfg.corpus);
    test_c = corpus::load_corpus(cfg.require(cfg.test_corpus, "test_corpus"));
  } else {
    auto spec = cfg.synth.spec();
    spec.sentences = cfg.synth.sentences + cfg.synth.test_sentences;
    auto all = corpus::synth_corpus(spec, cfg.seed());
    train_all.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.synth.sentences));
    test_c.assign(all.begin() + static_cast<std::ptrdiff_t>(cfg.synth.sentences), all.end());
  }
  stage("load", t0, {{"train_sentences", train_all.size()}, {"test_sentences", test_c.size()}});

  t0 = Clock::now();
  const auto stats = corpus::corpus_stats(train_all, corpus::CountingScheme::joint, cfg.gmap);
  stage("convert", t0, stats_json(stats));

  auto [train_c, dev_c] = corpus::split_train_dev(train_all, cfg.train.dev_ratio, cfg.seed());
  const auto v = vocabulary_for(cfg, train_c);
  const auto enc = maybe_encodings(cfg);
  fs::create_directories(cfg.output);
  v.save(cfg.output / "vocab.txt");

  std::vector<std::vector<eval::LevelReport>> test_reports;
  ordered_json runs = ordered_json::array();
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const std::uint64_t seed = cfg.seed() + r;
    t0 = Clock::now();
    auto run = train_one(cfg, seed, train_c, dev_c, v, enc ? &*enc : nullptr, io);
    stage("train", t0, {{"run", r}, {"seed", seed}, {"best_epoch", run.result.best_epoch}});

    t0 = Clock::now();
    const auto p = run_prediction(&run.models, test_c, v, cfg, enc ? &*enc : nullptr);
    stage("predict", t0, prediction_counts(p));

    t0 = Clock::now();
    auto rep = score(p, test_c, cfg);
    stage("evaluate", t0, {{"run", r}});

    const fs::path dir = cfg.output / ("run" + std::to_string(r));
    fs::create_directories(dir);
    auto echo = cfg.to_json();
    echo["seed"] = seed;
    save_models(dir, run.models, v, echo);
    write_json(dir / "train_log.json", log_json(run.result));
    write_predictions(dir, p);
    io::write_file_atomic(dir / "test_report.json", eval::report_json(rep) + "\n");
    io.out << "run " << r << " (seed " << seed << ")\n" << eval::render_table(rep);
    runs.push_back(nlohmann::ordered_json::parse(eval::report_json(rep)));
    test_reports.push_back(std::move(rep));
  }
  const auto agg = eval::aggregate_runs(test_reports);
  ordered_json report;
  report["stages"] = stages;
  report["runs"] = runs;
  report["aggregate"] = nlohmann::ordered_json::parse(eval::aggregate_json(agg));
  write_json(cfg.output / "pipeline_report.json", with_config(cfg, report));
  io.out << "\naggregate over " << cfg.runs << " run(s)\n" << eval::render_table(agg);
  return kOk;
}

int cmd_gradcheck(const RunConfig& cfg, const GradcheckFlags& f, Io io) {
  model::GradcheckOptions o;
  o.seed = cfg.seed();
  o.shape.dim = f.dim;
  o.shape.blocks = f.blocks;
  o.heads_only = f.heads_only;
  o.tolerance = f.tolerance;
  o.corrupt_gradient = f.corrupt_gradient;
  o.weights = f.unit_weights ? model::unit_function_weights() : model::default_function_weights();
  const auto r = model::gradcheck(o);
  ordered_json j;
  j["seed"] = o.seed;
  j["max_rel_error"] = r.max_rel_error;
  j["worst_tensor"] = r.worst_tensor;
  j["tolerance"] = o.tolerance;
  j["passed"] = r.passed;
  ordered_json t = ordered_json::object();
  for (const auto& tc : r.tensors) t[tc.name] = tc.max_rel_error;
  j["tensors"] = t;
  io.out << j.dump(2) << '\n';
  io.out << (r.passed ? "PASS" : "FAIL") << " max relative error " << r.max_rel_error << " (" << r.worst_tensor
         << ")\n";
  return r.passed ? kOk : kNumericError;
}

int run(int argc, char** argv, Io io) {
  CLI::App app{"sbelkit: BEL/SBEL conversion, joint relation and function classification, evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::string> config_path, out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "run configuration JSON");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_dir, "output directory");

  std::optional<std::string> corpus_path, test_corpus, vocab_path, model_path, function_model, encodings;
  std::optional<std::size_t> runs, epochs, sentences;
  std::optional<std::string> mode, levels;
  std::optional<double> noise;
  std::vector<std::string> pred_dirs;
  bool gold_labels = false, table = false;
  GradcheckFlags gflags;

  auto corpus_opt = [&](CLI::App* s) { s->add_option("--corpus", corpus_path, "annotated corpus (JSON lines)"); };
  auto* convert = app.add_subcommand("convert", "convert gold BEL to SBEL and report corpus statistics");
  corpus_opt(convert);
  auto* stats = app.add_subcommand("stats", "corpus statistics under both counting schemes");
  corpus_opt(stats);
  auto* synth = app.add_subcommand("synth", "generate a synthetic train/test corpus");
  synth->add_option("--sentences", sentences, "training sentences");
  synth->add_option("--noise", noise, "function label noise rate");
  auto* gen = app.add_subcommand("gen-instances", "build marked, tokenized instances");
  corpus_opt(gen);
  gen->add_option("--vocab", vocab_path);
  gen->add_option("--mode", mode, "joint or separate");
  auto* trn = app.add_subcommand("train", "train models, one per seed");
  corpus_opt(trn);
  trn->add_option("--vocab", vocab_path);
  trn->add_option("--mode", mode, "joint or separate");
  trn->add_option("--runs", runs);
  trn->add_option("--epochs", epochs);
  trn->add_option("--encodings", encodings, "precomputed encodings (JSON lines)");
  auto* pred = app.add_subcommand("predict", "predict SBEL and BEL statements");
  corpus_opt(pred);
  pred->add_option("--model", model_path, "joint or relation model archive");
  pred->add_option("--function-model", function_model, "function model archive (separate mode)");
  pred->add_option("--vocab", vocab_path);
  pred->add_option("--encodings", encodings, "precomputed encodings (JSON lines)");
  pred->add_flag("--gold-labels", gold_labels, "decode gold labels instead of model predictions");
  auto* evl = app.add_subcommand("evaluate", "score predictions against a gold corpus");
  corpus_opt(evl);
  evl->add_option("--pred", pred_dirs, "prediction directories (one per run)");
  evl->add_option("--levels", levels, "comma-separated levels");
  evl->add_flag("--table", table, "aligned text table instead of JSON");
  auto* pipe = app.add_subcommand("pipeline", "synthesize or load, train, predict and evaluate");
  corpus_opt(pipe);
  pipe->add_option("--test-corpus", test_corpus);
  pipe->add_option("--mode", mode, "joint or separate");
  pipe->add_option("--runs", runs);
  pipe->add_option("--epochs", epochs);
  pipe->add_option("--sentences", sentences, "synthetic training sentences");
  pipe->add_option("--noise", noise, "synthetic function label noise rate");
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
  gc->add_option("--dim", gflags.dim);
  gc->add_option("--blocks", gflags.blocks);
  gc->add_option("--tolerance", gflags.tolerance);
  gc->add_flag("--heads-only", gflags.heads_only, "check head parameters on precomputed encodings");
  gc->add_flag("--unit-weights", gflags.unit_weights, "all function weights 1");
  gc->add_flag("--corrupt-gradient", gflags.corrupt_gradient, "perturb one analytic gradient (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    io.err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    RunConfig cfg = config_path ? load_run_config(*config_path) : RunConfig{};
    if (seed) cfg.train.seed = *seed;
    if (out_dir) cfg.output = *out_dir;
    if (corpus_path) cfg.corpus = *corpus_path;
    if (test_corpus) cfg.test_corpus = *test_corpus;
    if (vocab_path) cfg.vocab = *vocab_path;
    if (model_path) cfg.model = *model_path;
    if (function_model) cfg.function_model = *function_model;
    if (encodings) cfg.encodings = *encodings;
    if (runs) cfg.runs = *runs;
    if (epochs) cfg.train.epochs = *epochs;
    if (sentences) cfg.synth.sentences = *sentences;
    if (noise) cfg.synth.label_noise = *noise;
    if (mode) {
      try {
        cfg.train.mode = train::mode_from(*mode);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
    }
    if (levels) {
      cfg.levels.clear();
      std::stringstream ss(*levels);
      for (std::string l; std::getline(ss, l, ',');)
        if (!l.empty()) cfg.levels.push_back(l);
    }
    if (cfg.runs == 0) throw ConfigError("runs must be positive");

    if (*convert) return cmd_convert(cfg, io);
    if (*stats) return cmd_stats(cfg, io);
    if (*synth) return cmd_synth(cfg, io);
    if (*gen) return cmd_gen_instances(cfg, io);
    if (*trn) return cmd_train(cfg, io);
    if (*pred) return cmd_predict(cfg, gold_labels, io);
    if (*evl) {
      std::vector<fs::path> dirs(pred_dirs.begin(), pred_dirs.end());
      return cmd_evaluate(cfg, dirs, table, io);
    }
    if (*pipe) return cmd_pipeline(cfg, io);
    if (*gc) return cmd_gradcheck(cfg, gflags, io);
  } catch (const ConfigError& e) {
    io.err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    io.err << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const DataError& e) {
    io.err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace sbelkit::cli
