#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>

#include "abacus/data/event_sequence.hpp"

namespace abacus::data {

struct TaobaoOptions {
  std::map<std::string, int> event_map{{"pv", 1}, {"cart", 2}, {"fav", 3}, {"buy", 4}};
  std::size_t max_len = 100;
  int purchase_event = 4;
  /// Trailing fraction of the corpus time range used as the labeling window.
  double label_window_fraction = 0.125;
};

struct IngestStats {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;  // malformed or unmapped behavior
  std::size_t users_dropped = 0;  // no events before the window boundary
  double window_boundary = 0.0;
};

struct IngestResult {
  Corpus corpus;
  IngestStats stats;
};

/// Reads UserBehavior rows `user,item,category,behavior,timestamp`.
IngestResult ingest_taobao(std::istream& in, const TaobaoOptions& options = {});
IngestResult ingest_taobao(const std::string& csv_path, const TaobaoOptions& options = {});

}  // namespace abacus::data
