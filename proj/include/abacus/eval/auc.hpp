#pragma once

#include <span>
#include <stdexcept>

namespace abacus::eval {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rank-based (Mann-Whitney) ROC-AUC; tied scores share their midrank so a
/// positive/negative tie counts 0.5. Needs at least one label of each class.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace abacus::eval
