#pragma once

#include <string>
#include <utility>
#include <vector>

#include "abacus/data/event_sequence.hpp"
#include "abacus/numcore/rng.hpp"

namespace abacus::augment {

enum class Augmentation { identity, permute, segment_mask, twin };

std::string to_string(Augmentation a);

/// Timestamp written at masked positions when times are masked.
inline constexpr double kMaskedTime = -1.0;
/// Event id written at masked positions: one past the last real type.
constexpr int mask_event(int num_event_types) { return num_event_types + 1; }

/// A possibly corrupted copy of a sequence. `masked_positions` is sorted and
/// holds exactly the positions carrying the mask sentinel.
struct AugmentedView {
  std::vector<int> events;
  std::vector<double> times;
  std::vector<std::size_t> masked_positions;
  Augmentation tag = Augmentation::identity;

  std::size_t length() const { return events.size(); }
};

struct MaskOptions {
  /// Fraction of positions to mask; 0 disables masking.
  double mask_ratio = 0.15;
  /// Mean of the (geometric) segment length distribution.
  double mean_segment_len = 5.0;
  bool mask_times = true;
};

AugmentedView identity(const data::EventSequence& seq);

/// Jointly permutes (event, time) pairs by one uniform random permutation.
AugmentedView random_permute(const data::EventSequence& seq, Rng& rng);

/// Masks non-overlapping contiguous segments until ceil(ratio * length)
/// positions are covered (at least one when ratio > 0).
AugmentedView segment_mask(const data::EventSequence& seq, Rng& rng, int num_event_types,
                           const MaskOptions& options);

/// Two independent segment_mask draws of the same base sequence.
std::pair<AugmentedView, AugmentedView> twin_views(const data::EventSequence& seq, Rng& rng, int num_event_types,
                                                   const MaskOptions& options);

/// Number of positions segment_mask covers for a sequence of this length.
std::size_t masked_count(std::size_t length, double mask_ratio);

}  // namespace abacus::augment
