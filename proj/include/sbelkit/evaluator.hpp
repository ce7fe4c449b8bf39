#pragma once

// Scoring at five levels:
//   SBEL_RE    relation triplet <em1, relation, em2>
//   SBEL_FD    (slot, function) claims inside relation triplets
//   SBEL       the full five-tuple
//   State(REL) BEL statements with functions stripped
//   State(MRG) full canonical BEL statements
// All levels use set semantics, and every statement carries a scope (the
// sentence id) so identical statements from different sentences stay
// distinct.

#include <map>
#include <string>
#include <vector>

#include "sbelkit/bel.hpp"
#include "sbelkit/sbel.hpp"

namespace sbelkit::eval {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Prf {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

Prf prf(const ConfusionCounts& c);

enum class Level { SbelRe, SbelFd, Sbel, StateRel, StateMrg };
inline constexpr Level kAllLevels[] = {Level::SbelRe, Level::SbelFd, Level::Sbel, Level::StateRel,
                                       Level::StateMrg};
std::string level_name(Level l);  // "SBEL_RE", ..., "State(MRG)"

struct TypeScore {
  ConfusionCounts counts;
  Prf prf;
};

struct LevelReport {
  std::string level;
  ConfusionCounts counts;
  Prf prf;
  std::map<std::string, TypeScore> per_type;
};

struct ScopedSbel {
  std::string scope;
  sbel::SbelStatement stmt;
};

struct ScopedBel {
  std::string scope;
  bel::BelStatement stmt;
};

std::vector<ScopedSbel> unscoped(const std::vector<sbel::SbelStatement>& xs);
std::vector<ScopedBel> unscoped(const std::vector<bel::BelStatement>& xs);

// Statements with relation None are not positives and are ignored.
LevelReport eval_sbel_re(const std::vector<ScopedSbel>& pred, const std::vector<ScopedSbel>& gold);
LevelReport eval_sbel_fd(const std::vector<ScopedSbel>& pred, const std::vector<ScopedSbel>& gold);
LevelReport eval_sbel(const std::vector<ScopedSbel>& pred, const std::vector<ScopedSbel>& gold);

enum class StateVariant { Rel, Mrg };
LevelReport eval_state(const std::vector<ScopedBel>& pred, const std::vector<ScopedBel>& gold, StateVariant v);

// All five levels, in kAllLevels order.
std::vector<LevelReport> evaluate_all(const std::vector<ScopedSbel>& pred_sbel,
                                      const std::vector<ScopedSbel>& gold_sbel,
                                      const std::vector<ScopedBel>& pred_bel,
                                      const std::vector<ScopedBel>& gold_bel);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct LevelAggregate {
  std::string level;
  Summary p, r, f1;
};

struct RunAggregate {
  std::size_t runs = 0;
  std::vector<LevelAggregate> levels;
  const LevelAggregate* find(const std::string& level) const;
};

Summary summarize(const std::vector<double>& xs);

// Throws DataError when runs disagree on their level sets or when empty.
RunAggregate aggregate_runs(const std::vector<std::vector<LevelReport>>& runs);

std::string report_json(const std::vector<LevelReport>& reports, int indent = 2);
std::string aggregate_json(const RunAggregate& agg, int indent = 2);
std::string render_table(const std::vector<LevelReport>& reports);
std::string render_table(const RunAggregate& agg);

}  // namespace sbelkit::eval
