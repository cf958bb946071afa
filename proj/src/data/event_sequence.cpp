#include "abacus/data/event_sequence.hpp"

#include <cmath>

namespace abacus::data {

void validate(const EventSequence& seq, int num_event_types, std::size_t max_len) {
  const auto n = seq.length();
  if (n == 0) throw DataError("sequence is empty");
  if (n > max_len) {
    throw DataError("sequence length " + std::to_string(n) + " exceeds max_len " + std::to_string(max_len));
  }
  if (seq.times.size() != n) {
    throw DataError("sequence has " + std::to_string(n) + " events but " + std::to_string(seq.times.size()) +
                    " timestamps");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (seq.events[i] < 1 || seq.events[i] > num_event_types) {
      throw DataError("event type " + std::to_string(seq.events[i]) + " at position " + std::to_string(i) +
                      " outside [1, " + std::to_string(num_event_types) + "]");
    }
    const double t = seq.times[i];
    if (!(t >= 0.0 && t <= 1.0)) throw DataError("timestamp at position " + std::to_string(i) + " outside [0, 1]");
    if (i > 0 && t < seq.times[i - 1]) throw DataError("timestamps decrease at position " + std::to_string(i));
  }
}

Histogram empirical_histogram(std::span<const int> events, int num_event_types) {
  if (events.empty()) throw DataError("empirical_histogram: empty sequence");
  Histogram h{std::vector<double>(static_cast<std::size_t>(num_event_types), 0.0)};
  std::vector<std::size_t> counts(h.probs.size(), 0);
  for (int e : events) {
    if (e < 1 || e > num_event_types) {
      throw DataError("empirical_histogram: event type " + std::to_string(e) + " outside [1, " +
                      std::to_string(num_event_types) + "]");
    }
    ++counts[static_cast<std::size_t>(e - 1)];
  }
  const double n = static_cast<double>(events.size());
  for (std::size_t k = 0; k < counts.size(); ++k) h.probs[k] = static_cast<double>(counts[k]) / n;
  return h;
}

bool on_simplex(std::span<const double> probs, double tol) {
  double s = 0.0;
  for (double p : probs) {
    if (!(p >= -tol)) return false;
    s += p;
  }
  return std::abs(s - 1.0) <= tol;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

void validate(const Corpus& corpus) {
  if (corpus.num_event_types < 1) throw DataError("corpus has no event types");
  for (const auto& ex : corpus.examples) {
    try {
      validate(ex.history, corpus.num_event_types, corpus.max_len);
    } catch (const DataError& e) {
      throw DataError("user " + std::to_string(ex.user_id) + ": " + e.what());
    }
    if (ex.label != 0 && ex.label != 1) throw DataError("user " + std::to_string(ex.user_id) + ": label not binary");
  }
}

}  // namespace abacus::data
