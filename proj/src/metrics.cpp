#include "logicmp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "logicmp/error.hpp"

namespace logicmp {

double aucpr(std::span<const ScoredItem> items) {
  std::vector<const ScoredItem*> order;
  std::size_t positives = 0;
  for (const auto& it : items) {
    if (!std::isfinite(it.score)) throw DataError("non-finite score for '" + it.key + "'");
    positives += it.truth ? 1 : 0;
    order.push_back(&it);
  }
  if (positives == 0) throw DataError("AUC-PR needs at least one positive");
  std::stable_sort(order.begin(), order.end(), [](const ScoredItem* a, const ScoredItem* b) { return a->score > b->score; });

  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = order[k]->score;
    while (k < order.size() && order[k]->score == threshold) {
      tp += order[k]->truth ? 1 : 0;
      ++seen;
      ++k;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

}  // namespace logicmp
