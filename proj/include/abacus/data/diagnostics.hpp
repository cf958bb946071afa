#pragma once

#include <span>
#include <string>
#include <vector>

#include "abacus/data/event_sequence.hpp"

namespace abacus::data {

struct DistributionDiagnostics {
  double ppl = 1.0;
  double gini_simpson = 0.0;
  double label_mean = 0.0;
  std::size_t size = 0;
  double mean_seq_length = 0.0;
  std::size_t max_seq_length = 0;
  std::vector<double> event_distribution;
};

double perplexity(std::span<const double> probs);
double gini_simpson(std::span<const double> probs);

/// Corpus-level statistics over all history events. Throws on no examples.
DistributionDiagnostics diagnostics(std::span<const LabeledExample> examples, int num_event_types);

std::string format_human(const DistributionDiagnostics& d);
/// One `key=value` per line.
std::string format_key_value(const DistributionDiagnostics& d);

}  // namespace abacus::data
