#pragma once

#include <cmath>
#include <vector>

#include "abacus/data/event_sequence.hpp"
#include "abacus/numcore/matrix.hpp"
#include "abacus/numcore/rng.hpp"

namespace testutil {

using abacus::Rng;
using abacus::data::EventSequence;
using abacus::num::Matrix;

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (auto& x : m.data()) x = rng.uniform(lo, hi);
  return m;
}

/// Events uniform in [1, k], sorted uniform times.
inline EventSequence random_sequence(std::size_t len, int k, Rng& rng) {
  EventSequence s;
  for (std::size_t i = 0; i < len; ++i) {
    s.events.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
    s.times.push_back(rng.uniform());
  }
  std::sort(s.times.begin(), s.times.end());
  return s;
}

inline std::vector<EventSequence> random_batch(std::size_t n, std::size_t min_len, std::size_t max_len, int k,
                                               Rng& rng) {
  std::vector<EventSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(random_sequence(min_len + rng.below(max_len - min_len + 1), k, rng));
  }
  return out;
}

/// Straight-line per-row log-softmax for oracles.
inline std::vector<double> log_softmax(std::span<const double> z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  std::vector<double> out;
  for (double v : z) out.push_back(v - m - std::log(s));
  return out;
}

}  // namespace testutil
