#include "abacus/data/split.hpp"

#include <algorithm>
#include <cmath>

namespace abacus::data {

DatasetSplit time_split(std::vector<LabeledExample> examples, const std::array<double, 3>& fractions) {
  if (examples.size() < 3) {
    throw DataError("time_split: need at least 3 examples, got " + std::to_string(examples.size()));
  }
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw DataError("time_split: fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("time_split: fractions must sum to 1");

  std::sort(examples.begin(), examples.end(), [](const LabeledExample& a, const LabeledExample& b) {
    return a.ref_time != b.ref_time ? a.ref_time < b.ref_time : a.user_id < b.user_id;
  });
  const double n = static_cast<double>(examples.size());
  const auto n_train = static_cast<std::size_t>(std::floor(fractions[0] * n + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(fractions[1] * n + 1e-9));

  DatasetSplit split;
  split.fractions = fractions;
  auto begin = std::make_move_iterator(examples.begin());
  split.train.assign(begin, begin + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(begin + static_cast<std::ptrdiff_t>(n_train), begin + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(begin + static_cast<std::ptrdiff_t>(n_train + n_val), std::make_move_iterator(examples.end()));
  return split;
}

}  // namespace abacus::data
