#include "abacus/data/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace abacus::data {

double perplexity(std::span<const double> probs) {
  double h2 = 0.0;
  for (double p : probs)
    if (p > 0.0) h2 -= p * std::log2(p);
  return std::exp2(h2);
}

double gini_simpson(std::span<const double> probs) {
  double s = 0.0;
  for (double p : probs) s += p * p;
  return 1.0 - s;
}

DistributionDiagnostics diagnostics(std::span<const LabeledExample> examples, int num_event_types) {
  if (examples.empty()) throw DataError("diagnostics: corpus has 0 examples");
  DistributionDiagnostics d;
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_event_types), 0);
  std::size_t total = 0, positives = 0;
  for (const auto& ex : examples) {
    for (int e : ex.history.events) {
      if (e < 1 || e > num_event_types) throw DataError("diagnostics: event type out of range");
      ++counts[static_cast<std::size_t>(e - 1)];
    }
    total += ex.history.length();
    positives += ex.label == 1 ? 1 : 0;
    d.max_seq_length = std::max(d.max_seq_length, ex.history.length());
  }
  d.size = examples.size();
  d.label_mean = static_cast<double>(positives) / static_cast<double>(d.size);
  d.mean_seq_length = static_cast<double>(total) / static_cast<double>(d.size);
  d.event_distribution.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    d.event_distribution[k] = total ? static_cast<double>(counts[k]) / static_cast<double>(total) : 0.0;
  d.ppl = perplexity(d.event_distribution);
  d.gini_simpson = gini_simpson(d.event_distribution);
  return d;
}

std::string format_human(const DistributionDiagnostics& d) {
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-10s %-10s %-12s %-8s %-8s\n", "Size", "Seq.Len", "Label Mean", "PPL", "GS");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10zu %-10.1f %-12.4f %-8.2f %-8.2f\n", d.size, d.mean_seq_length, d.label_mean,
                d.ppl, d.gini_simpson);
  out << buf << "event distribution:";
  for (std::size_t k = 0; k < d.event_distribution.size(); ++k) {
    std::snprintf(buf, sizeof buf, " %zu:%.4f", k + 1, d.event_distribution[k]);
    out << buf;
  }
  out << '\n';
  return out.str();
}

std::string format_key_value(const DistributionDiagnostics& d) {
  std::ostringstream out;
  out.precision(10);
  out << "size=" << d.size << '\n'
      << "mean_seq_length=" << d.mean_seq_length << '\n'
      << "max_seq_length=" << d.max_seq_length << '\n'
      << "label_mean=" << d.label_mean << '\n'
      << "ppl=" << d.ppl << '\n'
      << "gini_simpson=" << d.gini_simpson << '\n';
  for (std::size_t k = 0; k < d.event_distribution.size(); ++k)
    out << "p_event_" << (k + 1) << '=' << d.event_distribution[k] << '\n';
  return out.str();
}

}  // namespace abacus::data
