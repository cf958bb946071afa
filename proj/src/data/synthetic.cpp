#include "abacus/data/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "abacus/numcore/rng.hpp"

namespace abacus::data {

namespace {

std::vector<double> normalized(std::vector<double> w) {
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

std::size_t sample_categorical(std::span<const double> cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> cumulative(std::span<const double> p) {
  std::vector<double> cdf(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = (s += p[i]);
  for (double& c : cdf) c /= s;
  return cdf;
}

}  // namespace

SyntheticSpec two_archetype_spec(int num_event_types) {
  const auto k = static_cast<std::size_t>(num_event_types);
  std::vector<double> browse(k), engage(k), weights(k);
  const double last = std::max(1.0, static_cast<double>(k - 1));
  for (std::size_t i = 0; i < k; ++i) {
    browse[i] = std::pow(0.6, static_cast<double>(i));
    engage[i] = 1.0 + static_cast<double>(i) / last;
    weights[i] = -8.0 + 20.0 * static_cast<double>(i) / last;
  }
  SyntheticSpec spec;
  spec.archetypes.push_back({"browser", 0.5, normalized(browse), -3.0, weights});
  spec.archetypes.push_back({"engaged", 0.5, normalized(engage), -3.0, weights});
  return spec;
}

SyntheticSpec single_archetype_spec(int num_event_types, double label_rate) {
  const auto k = static_cast<std::size_t>(num_event_types);
  SyntheticSpec spec;
  spec.archetypes.push_back({"flat", 1.0, std::vector<double>(k, 1.0 / static_cast<double>(k)),
                             std::log(label_rate / (1.0 - label_rate)), std::vector<double>(k, 0.0)});
  return spec;
}

SyntheticSpec uniform_spec(int num_event_types) { return single_archetype_spec(num_event_types, 0.3); }

void validate(const SyntheticSpec& spec, int num_event_types) {
  if (spec.archetypes.empty()) throw DataError("synthetic spec has no archetypes");
  const auto k = static_cast<std::size_t>(num_event_types);
  double total_weight = 0.0;
  for (const auto& a : spec.archetypes) {
    const std::string who = "archetype '" + a.name + "'";
    if (a.event_probs.size() != k) throw DataError(who + ": event_probs must have " + std::to_string(k) + " entries");
    if (a.propensity_weights.size() != k) {
      throw DataError(who + ": propensity_weights must have " + std::to_string(k) + " entries");
    }
    double s = 0.0;
    for (double p : a.event_probs) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw DataError(who + ": event probability < 0 or non-finite");
      s += p;
    }
    if (!(s > 0.0)) throw DataError(who + ": event probabilities sum to 0");
    if (!(a.weight >= 0.0)) throw DataError(who + ": negative mixture weight");
    total_weight += a.weight;
  }
  if (!(total_weight > 0.0)) throw DataError("synthetic spec: mixture weights sum to 0");
}

double propensity(const Archetype& archetype, const Histogram& hist) {
  double z = archetype.propensity_bias;
  for (std::size_t i = 0; i < hist.probs.size(); ++i) z += archetype.propensity_weights[i] * hist.probs[i];
  return 1.0 / (1.0 + std::exp(-z));
}

Corpus gen_synthetic(std::uint64_t seed, std::size_t n_users, int num_event_types, std::size_t max_len,
                     const SyntheticSpec& spec) {
  if (num_event_types < 1) throw DataError("gen_synthetic: need at least one event type");
  if (max_len == 0) throw DataError("gen_synthetic: max_len must be positive");
  validate(spec, num_event_types);
  const std::size_t min_len = spec.min_len == 0 ? max_len : spec.min_len;
  if (min_len > max_len) throw DataError("gen_synthetic: min_len exceeds max_len");

  std::vector<double> mixture;
  for (const auto& a : spec.archetypes) mixture.push_back(a.weight);
  const auto mixture_cdf = cumulative(mixture);
  std::vector<std::vector<double>> event_cdfs;
  for (const auto& a : spec.archetypes) event_cdfs.push_back(cumulative(a.event_probs));

  Corpus corpus;
  corpus.num_event_types = num_event_types;
  corpus.max_len = max_len;
  corpus.examples.reserve(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    Rng rng(derive_seed({seed, 0x5e17ULL, u}));
    LabeledExample ex;
    ex.user_id = u;
    const auto arch = sample_categorical(mixture_cdf, rng.uniform());
    ex.archetype = static_cast<int>(arch);
    const std::size_t len = min_len + static_cast<std::size_t>(rng.below(max_len - min_len + 1));
    auto& h = ex.history;
    h.events.resize(len);
    h.times.resize(len);
    for (auto& e : h.events) e = static_cast<int>(sample_categorical(event_cdfs[arch], rng.uniform())) + 1;
    for (auto& t : h.times) t = rng.uniform();
    std::sort(h.times.begin(), h.times.end());
    ex.ref_time = rng.uniform();
    ex.label = rng.bernoulli(propensity(spec.archetypes[arch], empirical_histogram(h, num_event_types))) ? 1 : 0;
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace abacus::data
