#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "abacus/numcore/matrix.hpp"
#include "abacus/numcore/params.hpp"

namespace abacus::num {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

/// Handle to a recorded value. Cheap to copy; only valid while its tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so the node vector is already topologically sorted.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(double value);
  /// Leaf bound to a parameter; backward accumulates into `param.grad`.
  Var param(ParamArray& param);

  /// Records a node. `inputs` are used only to decide whether the node
  /// needs a gradient.
  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer for node `id`, zero-allocated on first use.
  Matrix& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  /// Accumulates d(loss)/d(node) for every node reachable from `loss` and
  /// adds parameter gradients into their ParamArray::grad. Each node's
  /// backward function runs at most once.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  /// Number of columns whose standard deviation hit the floor in
  /// standardize_cols on this tape.
  std::size_t std_floor_hits() const { return std_floor_hits_; }
  void note_std_floor_hit() { ++std_floor_hits_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    ParamArray* param = nullptr;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::size_t std_floor_hits_ = 0;
  bool backward_done_ = false;
};

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_row(Var a, Var row);  // a: m x n, row: 1 x n broadcast over rows
Var mul_row(Var a, Var row);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a);
Var log_sigmoid(Var a);
Var square(Var a);
/// tanh approximation of GELU.
Var gelu(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var gather_rows(Var a, std::vector<std::size_t> index);
/// Row r of the result is row r of `a` when take_a[r], else of `b`.
Var select_rows(const std::vector<bool>& take_a, Var a, Var b);
/// axis 0: mean over rows (1 x n); axis 1: mean over columns (m x 1).
Var mean(Var a, int axis);
Var sum(Var a);
/// Per-row normalization to zero mean / unit variance (no affine part).
Var layer_norm_rows(Var a, double eps = 1e-5);
/// Per-column (batch axis) standardization: (x - mean) / max(std, floor),
/// population std. Floor hits are counted on the tape.
Var standardize_cols(Var a, double floor = 1e-6);
/// Divides each column by its Euclidean norm (floored).
Var normalize_cols(Var a, double floor = 1e-12);

/// Layout of a packed batch of sequences: row b*steps + t holds position t
/// of example b; positions >= valid[b] are padding and are never attended to.
struct AttentionLayout {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::size_t heads = 1;
  std::vector<std::size_t> valid;
};

struct AttentionResult {
  Var out;
  /// probs[b * heads + h] is the steps x steps attention matrix.
  std::shared_ptr<const std::vector<Matrix>> probs;
};

/// Scaled dot-product multi-head self-attention over packed rows.
AttentionResult multi_head_attention(Var q, Var k, Var v, const AttentionLayout& layout);

}  // namespace abacus::num
