#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace abacus::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One user history: event types in [1, K] with normalized times in [0, 1].
struct EventSequence {
  std::vector<int> events;
  std::vector<double> times;

  std::size_t length() const { return events.size(); }
  bool operator==(const EventSequence&) const = default;
};

/// Throws DataError describing the first violated invariant.
void validate(const EventSequence& seq, int num_event_types, std::size_t max_len);

struct LabeledExample {
  std::uint64_t user_id = 0;
  EventSequence history;
  int label = 0;
  /// Raw time of the last history event; orders examples for time splits.
  double ref_time = 0.0;
  /// Generating archetype for synthetic corpora, -1 otherwise.
  int archetype = -1;

  bool operator==(const LabeledExample&) const = default;
};

/// A point on the probability simplex over event types 1..K (index k-1).
struct Histogram {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  bool operator==(const Histogram&) const = default;
};

/// probs[k-1] = count(events == k) / length. Throws on empty input or an
/// event outside [1, K].
Histogram empirical_histogram(std::span<const int> events, int num_event_types);
inline Histogram empirical_histogram(const EventSequence& seq, int num_event_types) {
  return empirical_histogram(seq.events, num_event_types);
}

/// True when all probs are >= -tol and they sum to 1 within tol.
bool on_simplex(std::span<const double> probs, double tol);

/// Shannon entropy in nats.
double entropy(std::span<const double> probs);

struct Corpus {
  int num_event_types = 0;
  std::size_t max_len = 0;
  std::vector<LabeledExample> examples;

  bool operator==(const Corpus&) const = default;
};

void validate(const Corpus& corpus);

}  // namespace abacus::data
