#include "sbelkit/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sbelkit/error.hpp"

namespace sbelkit::eval {

namespace {

constexpr char kSep = '\x1f';

// key -> type label; the type is a function of the key.
using Claims = std::map<std::string, std::string>;

LevelReport score(const std::string& level, const Claims& pred, const Claims& gold) {
  LevelReport r;
  r.level = level;
  for (const auto& [key, type] : pred) {
    auto& t = r.per_type[type].counts;
    if (gold.contains(key)) {
      ++r.counts.tp;
      ++t.tp;
    } else {
      ++r.counts.fp;
      ++t.fp;
    }
  }
  for (const auto& [key, type] : gold)
    if (!pred.contains(key)) {
      ++r.counts.fn;
      ++r.per_type[type].counts.fn;
    }
  r.prf = prf(r.counts);
  for (auto& [_, t] : r.per_type) t.prf = prf(t.counts);
  return r;
}

std::string triplet_key(const ScopedSbel& s) {
  return s.scope + kSep + sbel::to_string(s.stmt.em1) + kSep + std::string(sbel::to_string(s.stmt.relation)) +
         kSep + sbel::to_string(s.stmt.em2);
}

Claims triplets(const std::vector<ScopedSbel>& xs) {
  Claims out;
  for (const auto& s : xs)
    if (s.stmt.relation != sbel::RelationType::None)
      out.emplace(triplet_key(s), std::string(sbel::to_string(s.stmt.relation)));
  return out;
}

Claims tuples(const std::vector<ScopedSbel>& xs) {
  Claims out;
  for (const auto& s : xs)
    if (s.stmt.relation != sbel::RelationType::None)
      out.emplace(triplet_key(s) + kSep + std::string(sbel::to_string(s.stmt.func1)) + kSep +
                      std::string(sbel::to_string(s.stmt.func2)),
                  std::string(sbel::to_string(s.stmt.relation)));
  return out;
}

Claims slot_claims(const std::vector<ScopedSbel>& xs) {
  Claims out;
  for (const auto& s : xs) {
    if (s.stmt.relation == sbel::RelationType::None) continue;
    const std::string k = triplet_key(s);
    if (s.stmt.func1 != sbel::FunctionType::None)
      out.emplace(k + kSep + "1" + kSep + std::string(sbel::to_string(s.stmt.func1)),
                  std::string(sbel::to_string(s.stmt.func1)));
    if (s.stmt.func2 != sbel::FunctionType::None)
      out.emplace(k + kSep + "2" + kSep + std::string(sbel::to_string(s.stmt.func2)),
                  std::string(sbel::to_string(s.stmt.func2)));
  }
  return out;
}

Claims state_claims(const std::vector<ScopedBel>& xs, StateVariant v) {
  Claims out;
  auto add = [&](const std::string& scope, const bel::BelStatement& st) {
    const auto c = bel::canonicalize_bel(st);
    out.emplace(scope + kSep + bel::serialize_bel(c), c.relation);
  };
  for (const auto& s : xs) {
    if (v == StateVariant::Mrg) {
      add(s.scope, s.stmt);
    } else {
      for (const auto& flat : sbel::strip_functions(s.stmt)) add(s.scope, flat);
    }
  }
  return out;
}

nlohmann::ordered_json prf_json(const ConfusionCounts& c, const Prf& p) {
  nlohmann::ordered_json j;
  j["p"] = p.p;
  j["r"] = p.r;
  j["f1"] = p.f1;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  return j;
}

nlohmann::ordered_json summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["std"] = s.std;
  return j;
}

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * x);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
std::string lpad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

}  // namespace

Prf prf(const ConfusionCounts& c) {
  Prf out;
  if (c.tp + c.fp > 0) out.p = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) out.r = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (out.p + out.r > 0) out.f1 = 2.0 * out.p * out.r / (out.p + out.r);
  return out;
}

std::string level_name(Level l) {
  switch (l) {
    case Level::SbelRe: return "SBEL_RE";
    case Level::SbelFd: return "SBEL_FD";
    case Level::Sbel: return "SBEL";
    case Level::StateRel: return "State(REL)";
    case Level::StateMrg: return "State(MRG)";
  }
  return "?";
}

std::vector<ScopedSbel> unscoped(const std::vector<sbel::SbelStatement>& xs) {
  std::vector<ScopedSbel> out;
  for (const auto& s : xs) out.push_back({"", s});
  return out;
}

std::vector<ScopedBel> unscoped(const std::vector<bel::BelStatement>& xs) {
  std::vector<ScopedBel> out;
  for (const auto& s : xs) out.push_back({"", s});
  return out;
}

LevelReport eval_sbel_re(const std::vector<ScopedSbel>& pred, const std::vector<ScopedSbel>& gold) {
  return score(level_name(Level::SbelRe), triplets(pred), triplets(gold));
}

LevelReport eval_sbel_fd(const std::vector<ScopedSbel>& pred, const std::vector<ScopedSbel>& gold) {
  return score(level_name(Level::SbelFd), slot_claims(pred), slot_claims(gold));
}

LevelReport eval_sbel(const std::vector<ScopedSbel>& pred, const std::vector<ScopedSbel>& gold) {
  return score(level_name(Level::Sbel), tuples(pred), tuples(gold));
}

LevelReport eval_state(const std::vector<ScopedBel>& pred, const std::vector<ScopedBel>& gold, StateVariant v) {
  return score(level_name(v == StateVariant::Rel ? Level::StateRel : Level::StateMrg), state_claims(pred, v),
               state_claims(gold, v));
}

std::vector<LevelReport> evaluate_all(const std::vector<ScopedSbel>& pred_sbel,
                                      const std::vector<ScopedSbel>& gold_sbel,
                                      const std::vector<ScopedBel>& pred_bel,
                                      const std::vector<ScopedBel>& gold_bel) {
  return {eval_sbel_re(pred_sbel, gold_sbel), eval_sbel_fd(pred_sbel, gold_sbel), eval_sbel(pred_sbel, gold_sbel),
          eval_state(pred_bel, gold_bel, StateVariant::Rel), eval_state(pred_bel, gold_bel, StateVariant::Mrg)};
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

const LevelAggregate* RunAggregate::find(const std::string& level) const {
  for (const auto& l : levels)
    if (l.level == level) return &l;
  return nullptr;
}

RunAggregate aggregate_runs(const std::vector<std::vector<LevelReport>>& runs) {
  if (runs.empty()) throw DataError("aggregate_runs needs at least one run");
  std::vector<std::string> names;
  for (const auto& r : runs.front()) names.push_back(r.level);
  for (std::size_t k = 1; k < runs.size(); ++k) {
    std::vector<std::string> other;
    for (const auto& r : runs[k]) other.push_back(r.level);
    if (other != names) throw DataError("run " + std::to_string(k) + " covers different evaluation levels");
  }
  RunAggregate agg;
  agg.runs = runs.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> p, r, f;
    for (const auto& run : runs) {
      p.push_back(run[i].prf.p);
      r.push_back(run[i].prf.r);
      f.push_back(run[i].prf.f1);
    }
    agg.levels.push_back({names[i], summarize(p), summarize(r), summarize(f)});
  }
  return agg;
}

std::string report_json(const std::vector<LevelReport>& reports, int indent) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& r : reports) {
    nlohmann::ordered_json lv;
    lv["overall"] = prf_json(r.counts, r.prf);
    nlohmann::ordered_json types = nlohmann::ordered_json::object();
    for (const auto& [name, t] : r.per_type) types[name] = prf_json(t.counts, t.prf);
    lv["per_type"] = std::move(types);
    j[r.level] = std::move(lv);
  }
  return j.dump(indent);
}

std::string aggregate_json(const RunAggregate& agg, int indent) {
  nlohmann::ordered_json j;
  j["runs"] = agg.runs;
  nlohmann::ordered_json levels = nlohmann::ordered_json::object();
  for (const auto& l : agg.levels) {
    nlohmann::ordered_json lv;
    lv["p"] = summary_json(l.p);
    lv["r"] = summary_json(l.r);
    lv["f1"] = summary_json(l.f1);
    levels[l.level] = std::move(lv);
  }
  j["levels"] = std::move(levels);
  return j.dump(indent);
}

std::string render_table(const std::vector<LevelReport>& reports) {
  std::ostringstream out;
  out << pad("Level", 12) << lpad("P", 7) << lpad("R", 7) << lpad("F1", 7) << lpad("TP", 7) << lpad("FP", 7)
      << lpad("FN", 7) << '\n';
  for (const auto& r : reports) {
    out << pad(r.level, 12) << lpad(pct(r.prf.p), 7) << lpad(pct(r.prf.r), 7) << lpad(pct(r.prf.f1), 7)
        << lpad(std::to_string(r.counts.tp), 7) << lpad(std::to_string(r.counts.fp), 7)
        << lpad(std::to_string(r.counts.fn), 7) << '\n';
    for (const auto& [name, t] : r.per_type)
      out << pad("  " + name, 12) << lpad(pct(t.prf.p), 7) << lpad(pct(t.prf.r), 7) << lpad(pct(t.prf.f1), 7)
          << lpad(std::to_string(t.counts.tp), 7) << lpad(std::to_string(t.counts.fp), 7)
          << lpad(std::to_string(t.counts.fn), 7) << '\n';
  }
  return out.str();
}

std::string render_table(const RunAggregate& agg) {
  std::ostringstream out;
  auto cell = [](const Summary& s) { return pct(s.mean) + " (" + pct(s.std) + ")"; };
  out << pad("Level", 12) << lpad("P", 14) << lpad("R", 14) << lpad("F1", 14) << "   runs=" << agg.runs << '\n';
  for (const auto& l : agg.levels)
    out << pad(l.level, 12) << lpad(cell(l.p), 14) << lpad(cell(l.r), 14) << lpad(cell(l.f1), 14) << '\n';
  return out.str();
}

}  // namespace sbelkit::eval
