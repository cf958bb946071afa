#include <algorithm>
#include <string>

#include "abacus/encoders/embedding.hpp"
#include "abacus/encoders/encoder.hpp"

namespace abacus::enc {

using num::Var;

namespace {

Var layer_norm(num::Tape& tape, num::ParamStore& params, const std::string& prefix, Var x) {
  Var g = tape.param(params.get(prefix + ".gain"));
  Var b = tape.param(params.get(prefix + ".bias"));
  return num::add_row(num::mul_row(num::layer_norm_rows(x), g), b);
}

Var linear(num::Tape& tape, num::ParamStore& params, const std::string& w, const std::string& b, Var x) {
  return num::add_row(num::matmul(x, tape.param(params.get(w))), tape.param(params.get(b)));
}

}  // namespace

EncoderOutput encode_transformer(num::Tape& tape, num::ParamStore& params, const EncoderConfig& config,
                                 std::span<const AugmentedView> batch, bool want_positions) {
  const std::size_t B = batch.size();
  const std::size_t H = config.hidden_dim;
  std::size_t longest = 0;
  for (const auto& v : batch) longest = std::max(longest, v.length());
  const std::size_t T = longest + 1;
  const auto& pos_table = params.get("enc.tf.pos");
  if (T > pos_table.value.rows()) {
    throw std::invalid_argument("encode_transformer: length " + std::to_string(longest) +
                                " plus CLS exceeds position table of " + std::to_string(pos_table.value.rows()));
  }

  // Row b*T + t; CLS sits at t = length(b), padding after it.
  std::vector<std::size_t> rows(B * T, 0), pos(B * T, 0), cls_index(B);
  std::vector<double> times(B * T, 0.0);
  num::AttentionLayout layout{B, T, config.heads, std::vector<std::size_t>(B)};
  for (std::size_t b = 0; b < B; ++b) {
    const auto& v = batch[b];
    const std::size_t n = v.length();
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t r = b * T + t;
      pos[r] = t;
      if (t < n) {
        rows[r] = event_row(v.events[t], config.num_event_types);
        times[r] = v.times[t];
      } else if (t == n) {
        rows[r] = cls_row(config.num_event_types);
        times[r] = 1.0;
      }
    }
    cls_index[b] = b * T + n;
    layout.valid[b] = n + 1;
  }

  Var table = tape.param(params.get(kEmbeddingName));
  Var x = embed_rows(tape, table, rows, times);
  Var hs = num::add(linear(tape, params, "enc.tf.w_in", "enc.tf.b_in", x),
                    num::gather_rows(tape.param(params.get("enc.tf.pos")), pos));

  EncoderOutput out;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "enc.tf.l" + std::to_string(l) + ".";
    Var a = layer_norm(tape, params, p + "ln1", hs);
    Var qkv = linear(tape, params, p + "w_qkv", p + "b_qkv", a);
    auto att = num::multi_head_attention(num::slice_cols(qkv, 0, H), num::slice_cols(qkv, H, 2 * H),
                                         num::slice_cols(qkv, 2 * H, 3 * H), layout);
    out.attention.push_back(att.probs);
    hs = num::add(hs, linear(tape, params, p + "w_out", p + "b_out", att.out));
    Var f = layer_norm(tape, params, p + "ln2", hs);
    f = num::gelu(linear(tape, params, p + "ff1.w", p + "ff1.b", f));
    hs = num::add(hs, linear(tape, params, p + "ff2.w", p + "ff2.b", f));
  }
  Var final_states = layer_norm(tape, params, "enc.tf.ln_final", hs);

  out.summary = num::gather_rows(final_states, cls_index);
  out.batch = B;
  out.steps = T;
  out.time_major = false;
  if (want_positions) {
    out.positions = final_states;
    out.has_positions = true;
  }
  return out;
}

}  // namespace abacus::enc
