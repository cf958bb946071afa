#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abacus/data/event_sequence.hpp"

namespace abacus::data {

/// A user population. Purchase propensity of a user with histogram p is
/// sigmoid(propensity_bias + dot(propensity_weights, p)).
struct Archetype {
  std::string name;
  double weight = 1.0;
  std::vector<double> event_probs;
  double propensity_bias = 0.0;
  std::vector<double> propensity_weights;
};

struct SyntheticSpec {
  std::vector<Archetype> archetypes;
  /// Lengths are uniform in [min_len, max_len]; 0 means fixed at max_len.
  std::size_t min_len = 0;
};

/// Browsing-heavy vs engagement-heavy populations sharing one propensity
/// model that rewards the later event types.
SyntheticSpec two_archetype_spec(int num_event_types);
/// One population with uniform events and a constant propensity.
SyntheticSpec single_archetype_spec(int num_event_types, double label_rate = 0.3);
/// Uniform event distribution, used for diagnostics checks.
SyntheticSpec uniform_spec(int num_event_types);

/// Throws DataError on a malformed spec.
void validate(const SyntheticSpec& spec, int num_event_types);

double propensity(const Archetype& archetype, const Histogram& hist);

Corpus gen_synthetic(std::uint64_t seed, std::size_t n_users, int num_event_types, std::size_t max_len,
                     const SyntheticSpec& spec);

}  // namespace abacus::data
