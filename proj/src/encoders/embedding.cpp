#include "abacus/encoders/embedding.hpp"

#include <stdexcept>
#include <string>

namespace abacus::enc {

std::size_t event_row(int event, int num_event_types) {
  if (event < 1 || event > num_event_types + 1) {
    throw std::out_of_range("event id " + std::to_string(event) + " outside [1, " +
                            std::to_string(num_event_types + 1) + "]");
  }
  return static_cast<std::size_t>(event - 1);
}

void init_embedding(num::ParamStore& params, const EncoderConfig& config, Rng& rng) {
  params.add(kEmbeddingName, num::uniform_init(embedding_rows(config.num_event_types), config.embed_dim, 0.1, rng));
}

num::Var embed_rows(num::Tape& tape, num::Var table, std::span<const std::size_t> rows,
                    std::span<const double> times) {
  if (rows.size() != times.size()) throw num::ShapeError("embed_rows: rows/times length mismatch");
  auto emb = num::gather_rows(table, {rows.begin(), rows.end()});
  auto tau = tape.constant(num::Matrix(times.size(), 1, std::vector<double>(times.begin(), times.end())));
  return num::concat_cols({emb, tau});
}

}  // namespace abacus::enc
