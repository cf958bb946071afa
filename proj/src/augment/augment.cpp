#include "abacus/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace abacus::augment {

std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::identity: return "identity";
    case Augmentation::permute: return "permute";
    case Augmentation::segment_mask: return "segment-mask";
    case Augmentation::twin: return "twin";
  }
  return "unknown";
}

AugmentedView identity(const data::EventSequence& seq) {
  return AugmentedView{seq.events, seq.times, {}, Augmentation::identity};
}

AugmentedView random_permute(const data::EventSequence& seq, Rng& rng) {
  std::vector<std::size_t> order(seq.length());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  AugmentedView view{{}, {}, {}, Augmentation::permute};
  view.events.reserve(order.size());
  view.times.reserve(order.size());
  for (auto i : order) {
    view.events.push_back(seq.events[i]);
    view.times.push_back(seq.times[i]);
  }
  return view;
}

std::size_t masked_count(std::size_t length, double mask_ratio) {
  if (mask_ratio <= 0.0 || length == 0) return 0;
  const auto n = static_cast<std::size_t>(std::ceil(mask_ratio * static_cast<double>(length) - 1e-9));
  return std::clamp<std::size_t>(n, 1, length);
}

AugmentedView segment_mask(const data::EventSequence& seq, Rng& rng, int num_event_types,
                           const MaskOptions& options) {
  if (!(options.mask_ratio >= 0.0 && options.mask_ratio < 1.0)) {
    throw std::invalid_argument("segment_mask: mask_ratio must lie in [0, 1)");
  }
  if (!(options.mean_segment_len >= 1.0)) {
    throw std::invalid_argument("segment_mask: mean_segment_len must be >= 1");
  }
  const std::size_t n = seq.length();
  const std::size_t target = masked_count(n, options.mask_ratio);
  std::vector<bool> masked(n, false);
  std::size_t covered = 0;
  // Segment length is 1 + Geometric(p) so that its mean is mean_segment_len.
  const double p_stop = 1.0 / options.mean_segment_len;
  std::vector<std::size_t> starts;
  while (covered < target) {
    std::size_t len = 1;
    while (len < target - covered && !rng.bernoulli(p_stop)) ++len;
    for (;; --len) {
      starts.clear();
      for (std::size_t s = 0; s + len <= n; ++s) {
        bool free = true;
        for (std::size_t i = s; i < s + len && free; ++i) free = !masked[i];
        if (free) starts.push_back(s);
      }
      if (!starts.empty() || len == 1) break;
    }
    const std::size_t s = starts[rng.below(starts.size())];
    for (std::size_t i = s; i < s + len; ++i) masked[i] = true;
    covered += len;
  }

  AugmentedView view{seq.events, seq.times, {}, Augmentation::segment_mask};
  for (std::size_t i = 0; i < n; ++i) {
    if (!masked[i]) continue;
    view.masked_positions.push_back(i);
    view.events[i] = mask_event(num_event_types);
    if (options.mask_times) view.times[i] = kMaskedTime;
  }
  return view;
}

std::pair<AugmentedView, AugmentedView> twin_views(const data::EventSequence& seq, Rng& rng, int num_event_types,
                                                   const MaskOptions& options) {
  auto a = segment_mask(seq, rng, num_event_types, options);
  auto b = segment_mask(seq, rng, num_event_types, options);
  a.tag = b.tag = Augmentation::twin;
  return {std::move(a), std::move(b)};
}

}  // namespace abacus::augment
