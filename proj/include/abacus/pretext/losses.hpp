#pragma once

#include <span>
#include <vector>

#include "abacus/numcore/tape.hpp"

namespace abacus::pretext {

/// Mean over rows of -sum_k target[k] * log softmax(logits)[k].
/// Rejects targets that leave the simplex by more than 1e-6.
num::Var loss_abacus(num::Var logits, const num::Matrix& targets);

/// Cross-entropy against integer classes in [0, width).
num::Var loss_categorical(num::Var logits, std::span<const int> classes);

/// One row per masked position. `weights[r]` is 1 / (|M_b| * examples with
/// nonempty M) for the example b owning row r, so the result is the batch
/// mean of per-example (CE + lambda * squared time error) averages.
/// The first K columns of `outputs` are event logits, the last is the time.
num::Var loss_msm(num::Var outputs, std::span<const int> target_classes, std::span<const double> target_times,
                  std::span<const double> weights, double lambda);

/// Barlow Twins loss on projector outputs (batch x width). Columns are
/// standardized over the batch, C is the cosine similarity between
/// standardized columns of z and z2, and the loss is
/// sum_i (1 - C_ii)^2 + lambda * sum_{i != j} C_ij^2.
num::Var loss_bt(num::Var z, num::Var z2, double lambda);

/// The correlation matrix used by loss_bt, exposed for inspection.
num::Var bt_correlation(num::Var z, num::Var z2);

/// Mean binary cross-entropy on logits (batch x 1).
num::Var loss_bce(num::Var logits, std::span<const int> labels);

}  // namespace abacus::pretext
