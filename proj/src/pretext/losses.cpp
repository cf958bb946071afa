#include "abacus/pretext/losses.hpp"

#include <stdexcept>
#include <string>

#include "abacus/data/event_sequence.hpp"

namespace abacus::pretext {

using num::Matrix;
using num::Var;

Var loss_abacus(Var logits, const Matrix& targets) {
  if (!logits.value().same_shape(targets)) {
    throw num::ShapeError("loss_abacus: logits " + logits.value().shape_str() + " vs targets " + targets.shape_str());
  }
  for (std::size_t r = 0; r < targets.rows(); ++r) {
    if (!data::on_simplex(targets.row(r), 1e-6)) {
      throw std::invalid_argument("loss_abacus: target row " + std::to_string(r) + " is not on the simplex");
    }
  }
  num::Tape& tape = *logits.tape;
  Var logp = num::log_softmax_rows(logits);
  Var ce = num::sum(num::mul(tape.constant(targets), logp));
  return num::scale(ce, -1.0 / static_cast<double>(targets.rows()));
}

Var loss_categorical(Var logits, std::span<const int> classes) {
  if (classes.size() != logits.rows()) throw num::ShapeError("loss_categorical: one class per row required");
  Matrix onehot(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < classes.size(); ++r) {
    if (classes[r] < 0 || static_cast<std::size_t>(classes[r]) >= logits.cols()) {
      throw std::invalid_argument("loss_categorical: class " + std::to_string(classes[r]) + " out of range");
    }
    onehot(r, static_cast<std::size_t>(classes[r])) = 1.0;
  }
  return loss_abacus(logits, onehot);
}

Var loss_msm(Var outputs, std::span<const int> target_classes, std::span<const double> target_times,
             std::span<const double> weights, double lambda) {
  const std::size_t rows = outputs.rows();
  if (outputs.cols() < 2 || target_classes.size() != rows || target_times.size() != rows ||
      weights.size() != rows) {
    throw num::ShapeError("loss_msm: outputs " + outputs.value().shape_str() + " do not match " +
                          std::to_string(target_classes.size()) + " targets");
  }
  if (rows == 0) throw std::invalid_argument("loss_msm: no masked positions");
  num::Tape& tape = *outputs.tape;
  const std::size_t k = outputs.cols() - 1;
  Matrix weighted_onehot(rows, k);
  Matrix w(rows, 1), tau(rows, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    if (target_classes[r] < 0 || static_cast<std::size_t>(target_classes[r]) >= k) {
      throw std::invalid_argument("loss_msm: target class out of range");
    }
    weighted_onehot(r, static_cast<std::size_t>(target_classes[r])) = weights[r];
    w[r] = weights[r];
    tau[r] = target_times[r];
  }
  Var logp = num::log_softmax_rows(num::slice_cols(outputs, 0, k));
  Var ce = num::scale(num::sum(num::mul(tape.constant(weighted_onehot), logp)), -1.0);
  Var err = num::square(num::sub(tape.constant(tau), num::slice_cols(outputs, k, k + 1)));
  Var mse = num::sum(num::mul(tape.constant(w), err));
  return num::add(ce, num::scale(mse, lambda));
}

Var bt_correlation(Var z, Var z2) {
  if (!z.value().same_shape(z2.value())) {
    throw num::ShapeError("loss_bt: z " + z.value().shape_str() + " vs z' " + z2.value().shape_str());
  }
  if (z.rows() < 2) throw std::invalid_argument("loss_bt: batch size must be >= 2");
  Var a = num::normalize_cols(num::standardize_cols(z));
  Var b = num::normalize_cols(num::standardize_cols(z2));
  return num::matmul(num::transpose(a), b);
}

Var loss_bt(Var z, Var z2, double lambda) {
  Var c = bt_correlation(z, z2);
  num::Tape& tape = *z.tape;
  const std::size_t d = c.rows();
  Matrix eye = Matrix::identity(d);
  Matrix off(d, d, 1.0);
  for (std::size_t i = 0; i < d; ++i) off(i, i) = 0.0;
  Var eye_v = tape.constant(eye);
  Var invariance = num::sum(num::square(num::mul(num::sub(eye_v, c), eye_v)));
  Var redundancy = num::sum(num::square(num::mul(c, tape.constant(off))));
  return num::add(invariance, num::scale(redundancy, lambda));
}

Var loss_bce(Var logits, std::span<const int> labels) {
  if (logits.cols() != 1 || labels.size() != logits.rows()) {
    throw num::ShapeError("loss_bce: logits " + logits.value().shape_str() + " vs " +
                          std::to_string(labels.size()) + " labels");
  }
  num::Tape& tape = *logits.tape;
  Matrix y(labels.size(), 1), not_y(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("loss_bce: labels must be 0 or 1");
    y[i] = labels[i];
    not_y[i] = 1 - labels[i];
  }
  Var pos = num::mul(tape.constant(y), num::log_sigmoid(logits));
  Var neg = num::mul(tape.constant(not_y), num::log_sigmoid(num::scale(logits, -1.0)));
  return num::scale(num::sum(num::add(pos, neg)), -1.0 / static_cast<double>(labels.size()));
}

}  // namespace abacus::pretext
