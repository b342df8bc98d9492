#pragma once

#include <span>
#include <string>

namespace logicmp {

struct ScoredItem {
  std::string key;
  double score = 0.0;
  bool truth = false;
};

/// Area under the precision-recall curve as step interpolation: the sum over
/// distinct score thresholds (descending) of (R_k - R_{k-1}) * P_k. Equal
/// scores form one threshold. Throws DataError without positives.
double aucpr(std::span<const ScoredItem> items);

}  // namespace logicmp
