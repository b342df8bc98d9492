#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logicmp/engine.hpp"
#include "logicmp/kb.hpp"
#include "logicmp/metrics.hpp"

namespace logicmp {

std::string read_file(const std::string& path);

/// Unary potentials: `ATOM v_0 ... v_{D-1}` per line, one logit per label.
/// Cells not listed keep logit 0.
UnaryTable load_unary(std::string_view text, const KnowledgeBase& kb);

/// Query atoms, one per line, in file order without duplicates.
std::vector<GroundAtom> load_query(std::string_view text, const KnowledgeBase& kb);

struct MarginalRecord {
  std::string predicate;
  std::vector<std::string> args;
  std::string label;
  double probability = 0.0;
  bool observed = false;
};

/// Rows for every requested cell: boolean predicates report the `true` label
/// only, multi-class predicates every label. Without a query, all unobserved
/// cells are reported (observed ones too when `include_observed`). Sorted by
/// the CSV row text.
std::vector<MarginalRecord> marginal_records(const KnowledgeBase& kb, const MarginalTable& q,
                                             const std::optional<std::vector<GroundAtom>>& query,
                                             bool include_observed);

/// `predicate,arg1,...,argk,label,probability` rows, 9 decimals.
std::string format_csv(const std::vector<MarginalRecord>& records);
std::string format_json(const std::vector<MarginalRecord>& records);

/// Predictions: marginal CSV rows as written by format_csv, or `ATOM score`
/// lines. Keys are `P(a,b)` for the `true` label and `P(a,b)=LABEL` otherwise.
std::vector<ScoredItem> load_predictions(std::string_view text);

/// Truth facts in evidence syntax; the map holds key -> truth.
std::map<std::string, bool> load_truth(std::string_view text);

/// Attach truth to predictions. Truth keys missing from the predictions are a
/// DataError; predictions absent from the truth file count as negatives.
std::vector<ScoredItem> align(std::vector<ScoredItem> predictions, const std::map<std::string, bool>& truth);

}  // namespace logicmp
