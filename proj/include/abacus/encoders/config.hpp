#pragma once

#include <cstddef>
#include <string>

namespace abacus::enc {

enum class EncoderKind { gru, transformer };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& name);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::gru;
  int num_event_types = 6;
  std::size_t embed_dim = 3;
  std::size_t hidden_dim = 8;
  std::size_t layers = 1;
  std::size_t heads = 2;
  std::size_t ff_dim = 32;
  std::size_t max_len = 50;

  bool operator==(const EncoderConfig&) const = default;
};

/// Defaults for the transformer: 2 layers, 2 heads, feed-forward 32.
EncoderConfig transformer_defaults(int num_event_types, std::size_t max_len);
EncoderConfig gru_defaults(int num_event_types, std::size_t max_len);

/// Throws std::invalid_argument listing the violated constraint.
void validate(const EncoderConfig& config);

/// Stable textual identity of everything that determines parameter shapes.
std::string fingerprint(const EncoderConfig& config);

}  // namespace abacus::enc
