#pragma once

#include <span>
#include <vector>

#include "abacus/encoders/config.hpp"
#include "abacus/numcore/params.hpp"
#include "abacus/numcore/rng.hpp"
#include "abacus/numcore/tape.hpp"

namespace abacus::enc {

inline constexpr const char* kEmbeddingName = "embed.events";

/// Table rows: event types 1..K at rows 0..K-1, the mask sentinel at row K
/// and the CLS token at row K+1.
inline std::size_t embedding_rows(int num_event_types) { return static_cast<std::size_t>(num_event_types) + 2; }
inline std::size_t cls_row(int num_event_types) { return static_cast<std::size_t>(num_event_types) + 1; }

/// Maps an event id in [1, K+1] (K+1 = mask sentinel) to its table row.
std::size_t event_row(int event, int num_event_types);

void init_embedding(num::ParamStore& params, const EncoderConfig& config, Rng& rng);

/// Per-position input vectors [embedding row || time], one row per entry.
num::Var embed_rows(num::Tape& tape, num::Var table, std::span<const std::size_t> rows,
                    std::span<const double> times);

}  // namespace abacus::enc
