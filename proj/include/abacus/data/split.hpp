#pragma once

#include <array>
#include <string>
#include <vector>

#include "abacus/data/event_sequence.hpp"

namespace abacus::data {

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> val;
  std::vector<LabeledExample> test;
  std::array<double, 3> fractions{};
  std::string mode = "time";
};

/// Orders by (ref_time, user_id) and cuts contiguous train/val/test blocks.
DatasetSplit time_split(std::vector<LabeledExample> examples, const std::array<double, 3>& fractions);

}  // namespace abacus::data
