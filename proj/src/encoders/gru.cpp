#include <algorithm>
#include <string>

#include "abacus/encoders/embedding.hpp"
#include "abacus/encoders/encoder.hpp"

namespace abacus::enc {

using num::Var;

namespace {

struct GruLayer {
  Var w_input, w_hidden, b_input, b_hidden;
};

// Gate layout in the fused 3H columns: reset | update | candidate.
Var gru_cell(const GruLayer& p, Var x, Var h, std::size_t hidden) {
  const auto H = hidden;
  Var gi = num::add_row(num::matmul(x, p.w_input), p.b_input);
  Var gh = num::add_row(num::matmul(h, p.w_hidden), p.b_hidden);
  Var r = num::sigmoid(num::add(num::slice_cols(gi, 0, H), num::slice_cols(gh, 0, H)));
  Var z = num::sigmoid(num::add(num::slice_cols(gi, H, 2 * H), num::slice_cols(gh, H, 2 * H)));
  Var n = num::tanh(num::add(num::slice_cols(gi, 2 * H, 3 * H), num::mul(r, num::slice_cols(gh, 2 * H, 3 * H))));
  // (1 - z) * n + z * h
  return num::add(n, num::mul(z, num::sub(h, n)));
}

}  // namespace

EncoderOutput encode_gru(num::Tape& tape, num::ParamStore& params, const EncoderConfig& config,
                         std::span<const AugmentedView> batch, bool want_positions) {
  const std::size_t B = batch.size();
  std::size_t T = 0;
  for (const auto& v : batch) T = std::max(T, v.length());
  if (T > config.max_len) throw std::invalid_argument("encode_gru: sequence longer than max_len");

  Var table = tape.param(params.get(kEmbeddingName));
  std::vector<GruLayer> layers;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "enc.gru.l" + std::to_string(l) + ".";
    layers.push_back({tape.param(params.get(p + "w_input")), tape.param(params.get(p + "w_hidden")),
                      tape.param(params.get(p + "b_input")), tape.param(params.get(p + "b_hidden"))});
  }

  std::vector<Var> state(layers.size(), tape.constant(num::Matrix(B, config.hidden_dim)));
  std::vector<Var> per_step;
  std::vector<std::size_t> rows(B);
  std::vector<double> times(B);
  std::vector<bool> active(B);
  for (std::size_t t = 0; t < T; ++t) {
    bool all_active = true;
    for (std::size_t b = 0; b < B; ++b) {
      active[b] = t < batch[b].length();
      all_active = all_active && active[b];
      rows[b] = active[b] ? event_row(batch[b].events[t], config.num_event_types) : 0;
      times[b] = active[b] ? batch[b].times[t] : 0.0;
    }
    Var x = embed_rows(tape, table, rows, times);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Var next = gru_cell(layers[l], x, state[l], config.hidden_dim);
      state[l] = all_active ? next : num::select_rows(active, next, state[l]);
      x = state[l];
    }
    if (want_positions) per_step.push_back(state.back());
  }

  EncoderOutput out;
  out.summary = state.back();
  out.batch = B;
  out.steps = T;
  out.time_major = true;
  if (want_positions) {
    out.positions = num::concat_rows(per_step);
    out.has_positions = true;
  }
  return out;
}

}  // namespace abacus::enc
