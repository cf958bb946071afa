#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abacus/augment/augment.hpp"
#include "abacus/data/event_sequence.hpp"
#include "abacus/encoders/config.hpp"
#include "abacus/numcore/params.hpp"
#include "abacus/numcore/rng.hpp"
#include "abacus/numcore/tape.hpp"

namespace abacus::pretext {

enum class Task { abacus, abacus_r, abacus_m, msm, bt, nep, nkehp };

inline constexpr Task kAllTasks[] = {Task::abacus, Task::abacus_r, Task::abacus_m, Task::msm,
                                     Task::bt,     Task::nep,      Task::nkehp};

std::string to_string(Task task);
/// Accepts "abacus", "abacus-r", "Abacus-M", "msm", "bt", "barlow", ...
Task task_from_string(const std::string& name);

class TaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PretextOptions {
  augment::MaskOptions msm_mask{0.15, 5.0, true};
  augment::MaskOptions abacus_m_mask{0.15, 5.0, false};
  augment::MaskOptions bt_mask{0.15, 5.0, true};
  double lambda_msm = 1.0;
  double lambda_bt = 1.0;
  std::size_t k_future = 10;
  std::size_t head_hidden = 16;
  std::size_t bt_hidden = 32;
  std::size_t bt_width = 32;
};

/// Output width of a task head.
std::size_t head_width(Task task, int num_event_types, const PretextOptions& options);

/// Two-layer tanh MLP head named "head.<name>.{w1,b1,w2,b2}".
void init_mlp_head(num::ParamStore& params, const std::string& name, std::size_t in, std::size_t hidden,
                   std::size_t out, Rng& rng);
num::Var apply_mlp_head(num::Tape& tape, num::ParamStore& params, const std::string& name, num::Var x);

std::string head_name(Task task);
void init_task_head(num::ParamStore& params, Task task, const enc::EncoderConfig& config,
                    const PretextOptions& options, Rng& rng);

/// Builds the task's augmented views of `batch`, runs the shared encoder
/// and the task head, and returns the scalar task loss on `tape`.
/// Throws TaskError when no example in the batch can produce the loss.
num::Var task_loss(Task task, num::Tape& tape, num::ParamStore& params, const enc::EncoderConfig& config,
                   std::span<const data::EventSequence> batch, Rng& rng, const PretextOptions& options);

/// Per-task weights w_t >= 0 summing to 1.
struct MTLWeights {
  std::vector<std::pair<Task, double>> weights;

  std::vector<Task> tasks() const;
  std::optional<double> weight_of(Task task) const;
};

/// Throws std::invalid_argument on negative weights, duplicates, an empty
/// list, or a sum that differs from 1 by more than 1e-9.
void validate(const MTLWeights& weights);

/// sum_t w_t * L_t. Every weighted task must appear in `losses` and vice versa.
num::Var mtl_loss(const std::vector<std::pair<Task, num::Var>>& losses, const MTLWeights& weights);

/// Mean Shannon entropy (nats) of the per-sequence event histograms; the
/// infimum of the mean Abacus loss over any predictor.
double mean_histogram_entropy(std::span<const data::EventSequence> sequences, int num_event_types);

}  // namespace abacus::pretext
