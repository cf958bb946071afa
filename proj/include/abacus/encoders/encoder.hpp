#pragma once

#include <memory>
#include <span>
#include <vector>

#include "abacus/augment/augment.hpp"
#include "abacus/encoders/config.hpp"
#include "abacus/numcore/params.hpp"
#include "abacus/numcore/rng.hpp"
#include "abacus/numcore/tape.hpp"

namespace abacus::enc {

using augment::AugmentedView;

/// Result of encoding a batch.
struct EncoderOutput {
  /// B x hidden sequence embeddings h.
  num::Var summary;
  /// Per-position hidden states, present when requested. Row index of
  /// (example b, position t) is given by position_row.
  num::Var positions;
  bool has_positions = false;
  std::size_t batch = 0;
  std::size_t steps = 0;
  bool time_major = false;
  /// Transformer only: attention matrices per layer.
  std::vector<std::shared_ptr<const std::vector<num::Matrix>>> attention;

  std::size_t position_row(std::size_t b, std::size_t t) const {
    return time_major ? t * batch + b : b * steps + t;
  }
};

/// Adds embedding and encoder parameters for `config` in a fixed order.
void init_encoder(num::ParamStore& params, const EncoderConfig& config, Rng& rng);

/// Left-to-right GRU; h is each example's state at its last real position.
EncoderOutput encode_gru(num::Tape& tape, num::ParamStore& params, const EncoderConfig& config,
                         std::span<const AugmentedView> batch, bool want_positions);

/// Bidirectional pre-layer-norm transformer with a CLS token appended after
/// the last real position; h is the CLS output.
EncoderOutput encode_transformer(num::Tape& tape, num::ParamStore& params, const EncoderConfig& config,
                                 std::span<const AugmentedView> batch, bool want_positions);

EncoderOutput encode(num::Tape& tape, num::ParamStore& params, const EncoderConfig& config,
                     std::span<const AugmentedView> batch, bool want_positions = false);

/// Parameter names that belong to the embedding table or the encoder.
bool is_encoder_param(const std::string& name);

}  // namespace abacus::enc
