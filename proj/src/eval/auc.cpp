#include "abacus/eval/auc.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace abacus::eval {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw MetricError("auc: " + std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) +
                      " labels");
  }
  std::size_t pos = 0, neg = 0;
  for (int y : labels) {
    if (y == 1) {
      ++pos;
    } else if (y == 0) {
      ++neg;
    } else {
      throw MetricError("auc: labels must be 0 or 1");
    }
  }
  if (pos == 0) throw MetricError("auc: no positive labels (class 1 missing)");
  if (neg == 0) throw MetricError("auc: no negative labels (class 0 missing)");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of midranks (1-based) of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t tied_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tied_pos += labels[order[j]] == 1 ? 1 : 0;
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(tied_pos);
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

}  // namespace abacus::eval
