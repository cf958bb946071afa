#include <stdexcept>
#include <string>

#include "abacus/encoders/config.hpp"
#include "abacus/encoders/embedding.hpp"
#include "abacus/encoders/encoder.hpp"

namespace abacus::enc {

std::string to_string(EncoderKind kind) { return kind == EncoderKind::gru ? "gru" : "transformer"; }

EncoderKind encoder_kind_from_string(const std::string& name) {
  if (name == "gru") return EncoderKind::gru;
  if (name == "transformer" || name == "bert") return EncoderKind::transformer;
  throw std::invalid_argument("unknown encoder kind '" + name + "' (expected gru or transformer)");
}

EncoderConfig gru_defaults(int num_event_types, std::size_t max_len) {
  EncoderConfig c;
  c.kind = EncoderKind::gru;
  c.num_event_types = num_event_types;
  c.max_len = max_len;
  c.layers = 1;
  return c;
}

EncoderConfig transformer_defaults(int num_event_types, std::size_t max_len) {
  EncoderConfig c;
  c.kind = EncoderKind::transformer;
  c.num_event_types = num_event_types;
  c.max_len = max_len;
  c.layers = 2;
  c.heads = 2;
  c.ff_dim = 32;
  return c;
}

void validate(const EncoderConfig& c) {
  std::string errors;
  auto fail = [&](const std::string& msg) { errors += (errors.empty() ? "" : "; ") + msg; };
  if (c.num_event_types < 1) fail("num_event_types must be >= 1");
  if (c.embed_dim < 1) fail("embed_dim must be >= 1");
  if (c.hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (c.layers < 1) fail("layers must be >= 1");
  if (c.max_len < 1) fail("max_len must be >= 1");
  if (c.kind == EncoderKind::transformer) {
    if (c.heads < 1 || c.hidden_dim % c.heads != 0) fail("hidden_dim must be divisible by heads");
    if (c.ff_dim < 1) fail("ff_dim must be >= 1");
  }
  if (!errors.empty()) throw std::invalid_argument("encoder config: " + errors);
}

std::string fingerprint(const EncoderConfig& c) {
  std::string fp = to_string(c.kind) + ";k=" + std::to_string(c.num_event_types) +
                   ";d=" + std::to_string(c.embed_dim) + ";h=" + std::to_string(c.hidden_dim) +
                   ";layers=" + std::to_string(c.layers) + ";max_len=" + std::to_string(c.max_len);
  if (c.kind == EncoderKind::transformer) {
    fp += ";heads=" + std::to_string(c.heads) + ";ff=" + std::to_string(c.ff_dim);
  }
  return fp;
}

void init_encoder(num::ParamStore& params, const EncoderConfig& config, Rng& rng) {
  validate(config);
  init_embedding(params, config, rng);
  const std::size_t in = config.embed_dim + 1;
  const std::size_t h = config.hidden_dim;
  auto zeros = [](std::size_t r, std::size_t c) { return num::Matrix(r, c); };
  if (config.kind == EncoderKind::gru) {
    for (std::size_t l = 0; l < config.layers; ++l) {
      const std::string p = "enc.gru.l" + std::to_string(l) + ".";
      params.add(p + "w_input", num::xavier_uniform(l == 0 ? in : h, 3 * h, rng));
      params.add(p + "w_hidden", num::xavier_uniform(h, 3 * h, rng));
      params.add(p + "b_input", zeros(1, 3 * h));
      params.add(p + "b_hidden", zeros(1, 3 * h));
    }
    return;
  }
  params.add("enc.tf.w_in", num::xavier_uniform(in, h, rng));
  params.add("enc.tf.b_in", zeros(1, h));
  params.add("enc.tf.pos", num::uniform_init(config.max_len + 1, h, 0.1, rng));
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "enc.tf.l" + std::to_string(l) + ".";
    params.add(p + "ln1.gain", num::Matrix(1, h, 1.0));
    params.add(p + "ln1.bias", zeros(1, h));
    params.add(p + "w_qkv", num::xavier_uniform(h, 3 * h, rng));
    params.add(p + "b_qkv", zeros(1, 3 * h));
    params.add(p + "w_out", num::xavier_uniform(h, h, rng));
    params.add(p + "b_out", zeros(1, h));
    params.add(p + "ln2.gain", num::Matrix(1, h, 1.0));
    params.add(p + "ln2.bias", zeros(1, h));
    params.add(p + "ff1.w", num::xavier_uniform(h, config.ff_dim, rng));
    params.add(p + "ff1.b", zeros(1, config.ff_dim));
    params.add(p + "ff2.w", num::xavier_uniform(config.ff_dim, h, rng));
    params.add(p + "ff2.b", zeros(1, h));
  }
  params.add("enc.tf.ln_final.gain", num::Matrix(1, h, 1.0));
  params.add("enc.tf.ln_final.bias", zeros(1, h));
}

EncoderOutput encode(num::Tape& tape, num::ParamStore& params, const EncoderConfig& config,
                     std::span<const AugmentedView> batch, bool want_positions) {
  if (batch.empty()) throw std::invalid_argument("encode: empty batch");
  for (const auto& v : batch) {
    if (v.length() == 0) throw std::invalid_argument("encode: empty sequence in batch");
    if (v.times.size() != v.length()) throw std::invalid_argument("encode: events/times length mismatch");
  }
  return config.kind == EncoderKind::gru ? encode_gru(tape, params, config, batch, want_positions)
                                         : encode_transformer(tape, params, config, batch, want_positions);
}

bool is_encoder_param(const std::string& name) {
  return name.rfind("embed.", 0) == 0 || name.rfind("enc.", 0) == 0;
}

}  // namespace abacus::enc
