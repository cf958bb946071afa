#include "abacus/pretext/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "abacus/encoders/encoder.hpp"
#include "abacus/pretext/losses.hpp"

namespace abacus::pretext {

using augment::AugmentedView;
using num::Matrix;
using num::Var;

namespace {

Matrix histogram_rows(std::span<const data::EventSequence> batch, int k) {
  Matrix targets(batch.size(), static_cast<std::size_t>(k));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto h = data::empirical_histogram(batch[b], k);
    std::copy(h.probs.begin(), h.probs.end(), targets.row(b).begin());
  }
  return targets;
}

Var abacus_family(Task task, num::Tape& tape, num::ParamStore& params, const enc::EncoderConfig& config,
                  std::span<const data::EventSequence> batch, Rng& rng, const PretextOptions& options) {
  std::vector<AugmentedView> views;
  views.reserve(batch.size());
  for (const auto& seq : batch) {
    switch (task) {
      case Task::abacus: views.push_back(augment::identity(seq)); break;
      case Task::abacus_r: views.push_back(augment::random_permute(seq, rng)); break;
      default:
        views.push_back(augment::segment_mask(seq, rng, config.num_event_types, options.abacus_m_mask));
    }
  }
  auto encoded = enc::encode(tape, params, config, views);
  Var logits = apply_mlp_head(tape, params, head_name(task), encoded.summary);
  // Targets always come from the uncorrupted sequence.
  return loss_abacus(logits, histogram_rows(batch, config.num_event_types));
}

Var msm(num::Tape& tape, num::ParamStore& params, const enc::EncoderConfig& config,
        std::span<const data::EventSequence> batch, Rng& rng, const PretextOptions& options) {
  std::vector<AugmentedView> views;
  views.reserve(batch.size());
  std::size_t nonempty = 0;
  for (const auto& seq : batch) {
    views.push_back(augment::segment_mask(seq, rng, config.num_event_types, options.msm_mask));
    nonempty += views.back().masked_positions.empty() ? 0 : 1;
  }
  if (nonempty == 0) throw TaskError("msm: no masked positions in batch");
  auto encoded = enc::encode(tape, params, config, views, true);
  std::vector<std::size_t> rows;
  std::vector<int> classes;
  std::vector<double> times, weights;
  for (std::size_t b = 0; b < views.size(); ++b) {
    const auto& m = views[b].masked_positions;
    for (auto pos : m) {
      rows.push_back(encoded.position_row(b, pos));
      classes.push_back(batch[b].events[pos] - 1);
      times.push_back(batch[b].times[pos]);
      weights.push_back(1.0 / (static_cast<double>(m.size()) * static_cast<double>(nonempty)));
    }
  }
  Var states = num::gather_rows(encoded.positions, rows);
  Var outputs = apply_mlp_head(tape, params, head_name(Task::msm), states);
  return loss_msm(outputs, classes, times, weights, options.lambda_msm);
}

Var barlow(num::Tape& tape, num::ParamStore& params, const enc::EncoderConfig& config,
           std::span<const data::EventSequence> batch, Rng& rng, const PretextOptions& options) {
  if (batch.size() < 2) throw TaskError("bt: batch size must be >= 2");
  std::vector<AugmentedView> first, second;
  for (const auto& seq : batch) {
    auto [a, b] = augment::twin_views(seq, rng, config.num_event_types, options.bt_mask);
    first.push_back(std::move(a));
    second.push_back(std::move(b));
  }
  auto h1 = enc::encode(tape, params, config, first);
  auto h2 = enc::encode(tape, params, config, second);
  Var z1 = apply_mlp_head(tape, params, head_name(Task::bt), h1.summary);
  Var z2 = apply_mlp_head(tape, params, head_name(Task::bt), h2.summary);
  return loss_bt(z1, z2, options.lambda_bt);
}

Var next_event(Task task, num::Tape& tape, num::ParamStore& params, const enc::EncoderConfig& config,
               std::span<const data::EventSequence> batch, Rng& rng, const PretextOptions& options) {
  const std::size_t horizon = task == Task::nep ? 1 : options.k_future;
  if (horizon == 0) throw TaskError("nkehp: k_future must be >= 1");
  const int k = config.num_event_types;
  std::vector<AugmentedView> prefixes;
  std::vector<std::vector<double>> targets;
  for (const auto& seq : batch) {
    const std::size_t n = seq.length();
    if (n < horizon + 1) continue;
    // Split position s in [1, n - horizon]: prefix is events [0, s).
    const std::size_t s = 1 + static_cast<std::size_t>(rng.below(n - horizon));
    AugmentedView v{{seq.events.begin(), seq.events.begin() + static_cast<std::ptrdiff_t>(s)},
                    {seq.times.begin(), seq.times.begin() + static_cast<std::ptrdiff_t>(s)},
                    {},
                    augment::Augmentation::identity};
    prefixes.push_back(std::move(v));
    targets.push_back(
        data::empirical_histogram(std::span<const int>(seq.events).subspan(s, horizon), k).probs);
  }
  if (prefixes.empty()) {
    throw TaskError(to_string(task) + ": no sequence in batch has at least " + std::to_string(horizon + 1) +
                    " events");
  }
  Matrix target(targets.size(), static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < targets.size(); ++r) std::copy(targets[r].begin(), targets[r].end(), target.row(r).begin());
  auto encoded = enc::encode(tape, params, config, prefixes);
  Var logits = apply_mlp_head(tape, params, head_name(task), encoded.summary);
  return loss_abacus(logits, target);
}

}  // namespace

Var task_loss(Task task, num::Tape& tape, num::ParamStore& params, const enc::EncoderConfig& config,
              std::span<const data::EventSequence> batch, Rng& rng, const PretextOptions& options) {
  if (batch.empty()) throw TaskError(to_string(task) + ": empty batch");
  switch (task) {
    case Task::abacus:
    case Task::abacus_r:
    case Task::abacus_m: return abacus_family(task, tape, params, config, batch, rng, options);
    case Task::msm: return msm(tape, params, config, batch, rng, options);
    case Task::bt: return barlow(tape, params, config, batch, rng, options);
    case Task::nep:
    case Task::nkehp: return next_event(task, tape, params, config, batch, rng, options);
  }
  throw TaskError("unknown task");
}

std::vector<Task> MTLWeights::tasks() const {
  std::vector<Task> out;
  for (const auto& [t, w] : weights) out.push_back(t);
  return out;
}

std::optional<double> MTLWeights::weight_of(Task task) const {
  for (const auto& [t, w] : weights)
    if (t == task) return w;
  return std::nullopt;
}

void validate(const MTLWeights& weights) {
  if (weights.weights.empty()) throw std::invalid_argument("MTL weights: no tasks");
  std::set<Task> seen;
  double total = 0.0;
  for (const auto& [t, w] : weights.weights) {
    if (!seen.insert(t).second) throw std::invalid_argument("MTL weights: duplicate task " + to_string(t));
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("MTL weights: weight for " + to_string(t) + " must be >= 0");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("MTL weights: sum to " + std::to_string(total) + ", expected 1");
  }
}

Var mtl_loss(const std::vector<std::pair<Task, Var>>& losses, const MTLWeights& weights) {
  validate(weights);
  for (const auto& [t, w] : weights.weights) {
    const bool present = std::any_of(losses.begin(), losses.end(), [t = t](const auto& l) { return l.first == t; });
    if (!present) throw std::invalid_argument("mtl_loss: weight given for absent task " + to_string(t));
  }
  std::optional<Var> total;
  for (const auto& [t, loss] : losses) {
    const auto w = weights.weight_of(t);
    if (!w) throw std::invalid_argument("mtl_loss: no weight for task " + to_string(t));
    Var term = num::scale(loss, *w);
    total = total ? num::add(*total, term) : term;
  }
  return *total;
}

double mean_histogram_entropy(std::span<const data::EventSequence> sequences, int num_event_types) {
  if (sequences.empty()) return 0.0;
  double s = 0.0;
  for (const auto& seq : sequences) s += data::entropy(data::empirical_histogram(seq, num_event_types).probs);
  return s / static_cast<double>(sequences.size());
}

}  // namespace abacus::pretext
