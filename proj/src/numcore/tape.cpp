#include "abacus/numcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace abacus::num {

const Matrix& Var::value() const { return tape->value(id); }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("scalar(): value has shape " + v.shape_str());
  }
  return v[0];
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(double value) { return constant(Matrix(1, 1, value)); }

Var Tape::param(ParamArray& param) {
  nodes_.push_back(Node{param.value, {}, true, &param, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
  bool needs = false;
  for (auto id : inputs) needs = needs || nodes_[id].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs, nullptr, needs ? std::move(backward) : BackwardFn{}});
  return Var{this, nodes_.size() - 1};
}

Matrix& Tape::grad(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: loss belongs to another tape");
  const auto& v = nodes_[loss.id].value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + v.shape_str());
  }
  if (backward_done_) throw std::logic_error("backward: tape already replayed");
  backward_done_ = true;
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param != nullptr) {
      auto& pg = n.param->grad;
      for (std::size_t j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument("operands recorded on different tapes");
  }
  return *a.tape;
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                   b.shape_str());
}

template <class F>
void accumulate(Tape& t, std::size_t id, F&& f) {
  if (t.requires_grad(id)) f(t.grad(id));
}

template <class F, class D>
Var unary(Var a, F&& forward, D&& derivative) {
  Tape& t = *a.tape;
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
  return t.record(std::move(y), {a.id}, [a = a.id, derivative](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(a);
    const Matrix& y = t.value(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * derivative(x[i], y[i]);
    });
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  return t.record(num::matmul(a.value(), b.value()), {a.id, b.id},
                  [a = a.id, b = b.id](Tape& t, std::size_t self) {
                    const Matrix& g = t.grad(self);
                    accumulate(t, a, [&](Matrix& ga) {
                      Matrix d = matmul_a_bt(g, t.value(b));
                      for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i];
                    });
                    accumulate(t, b, [&](Matrix& gb) {
                      Matrix d = matmul_at_b(t.value(a), g);
                      for (std::size_t i = 0; i < d.size(); ++i) gb[i] += d[i];
                    });
                  });
}

Var transpose(Var a) {
  return a.tape->record(num::transpose(a.value()), {a.id}, [a = a.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
    });
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (!a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
  Matrix y = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return t.record(std::move(y), {a.id, b.id}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    for (auto id : {a, b}) {
      accumulate(t, id, [&](Matrix& gi) {
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
      });
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (!a.value().same_shape(b.value())) shape_error("sub", a.value(), b.value());
  Matrix y = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return t.record(std::move(y), {a.id, b.id}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
    accumulate(t, b, [&](Matrix& gb) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    });
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (!a.value().same_shape(b.value())) shape_error("mul", a.value(), b.value());
  Matrix y = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return t.record(std::move(y), {a.id, b.id}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, a, [&](Matrix& ga) {
      const Matrix& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    });
    accumulate(t, b, [&](Matrix& gb) {
      const Matrix& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    });
  });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_row", a.value(), row.value());
  Matrix y = a.value();
  const Matrix& r = row.value();
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += r[j];
  return t.record(std::move(y), {a.id, row.id}, [a = a.id, row = row.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
    accumulate(t, row, [&](Matrix& gr) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
    });
  });
}

Var mul_row(Var a, Var row) {
  Tape& t = tape_of(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("mul_row", a.value(), row.value());
  Matrix y = a.value();
  const Matrix& r = row.value();
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) *= r[j];
  return t.record(std::move(y), {a.id, row.id}, [a = a.id, row = row.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& r = t.value(row);
    const Matrix& av = t.value(a);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * r[j];
    });
    accumulate(t, row, [&](Matrix& gr) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j) * av(i, j);
    });
  });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var log_sigmoid(Var a) {
  // log σ(x) = -softplus(-x); derivative 1 - σ(x) = σ(-x).
  return unary(
      a,
      [](double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0) {
          const double e = std::exp(-x);
          return e / (1.0 + e);
        }
        return 1.0 / (1.0 + std::exp(x));
      });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var gelu(Var a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double k = 0.044715;
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); },
      [](double x, double) {
        const double th = std::tanh(c * (x + k * x * x * x));
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * c * (1.0 + 3.0 * k * x * x);
      });
}

Var softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xr = x.row(i);
    auto yr = y.row(i);
    const double m = *std::max_element(xr.begin(), xr.end());
    double z = 0.0;
    for (std::size_t j = 0; j < xr.size(); ++j) z += (yr[j] = std::exp(xr[j] - m));
    for (auto& v : yr) v /= z;
  }
  return a.tape->record(std::move(y), {a.id}, [a = a.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
        for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
      }
    });
  });
}

Var log_softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xr = x.row(i);
    const double m = *std::max_element(xr.begin(), xr.end());
    double z = 0.0;
    for (double v : xr) z += std::exp(v - m);
    const double lse = m + std::log(z);
    for (std::size_t j = 0; j < xr.size(); ++j) y(i, j) = xr[j] - lse;
  }
  return a.tape->record(std::move(y), {a.id}, [a = a.id](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double gsum = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) gsum += g(i, j);
        for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += g(i, j) - std::exp(y(i, j)) * gsum;
      }
    });
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = *parts.front().tape;
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    tape_of(parts.front(), p);
    if (p.rows() != rows) shape_error("concat_cols", parts.front().value(), p.value());
    cols += p.cols();
    ids.push_back(p.id);
  }
  Matrix y(rows, cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(v.row(i).begin(), v.row(i).end(), y.row(i).begin() + static_cast<std::ptrdiff_t>(off));
    off += v.cols();
  }
  return t.record(std::move(y), ids, [ids](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (auto id : ids) {
      const std::size_t c = t.value(id).cols();
      accumulate(t, id, [&](Matrix& gi) {
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) gi(i, j) += g(i, off + j);
      });
      off += c;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& t = *parts.front().tape;
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    tape_of(parts.front(), p);
    if (p.cols() != cols) shape_error("concat_rows", parts.front().value(), p.value());
    rows += p.rows();
    ids.push_back(p.id);
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  return t.record(Matrix(rows, cols, std::move(data)), ids, [ids](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (auto id : ids) {
      const std::size_t n = t.value(id).size();
      accumulate(t, id, [&](Matrix& gi) {
        for (std::size_t i = 0; i < n; ++i) gi[i] += g[off + i];
      });
      off += n;
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for shape " + a.value().shape_str());
  }
  const Matrix& x = a.value();
  Matrix y(x.rows(), end - begin);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) y(i, j - begin) = x(i, j);
  return a.tape->record(std::move(y), {a.id}, [a = a.id, begin](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, begin + j) += g(i, j);
    });
  });
}

Var gather_rows(Var a, std::vector<std::size_t> index) {
  const Matrix& x = a.value();
  Matrix y(index.size(), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= x.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(index[i]) + " out of range for shape " +
                       x.shape_str());
    }
    std::copy(x.row(index[i]).begin(), x.row(index[i]).end(), y.row(i).begin());
  }
  return a.tape->record(std::move(y), {a.id},
                        [a = a.id, index = std::move(index)](Tape& t, std::size_t self) {
                          const Matrix& g = t.grad(self);
                          accumulate(t, a, [&](Matrix& ga) {
                            for (std::size_t i = 0; i < index.size(); ++i)
                              for (std::size_t j = 0; j < g.cols(); ++j) ga(index[i], j) += g(i, j);
                          });
                        });
}

Var select_rows(const std::vector<bool>& take_a, Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (!a.value().same_shape(b.value()) || take_a.size() != a.rows()) {
    shape_error("select_rows", a.value(), b.value());
  }
  Matrix y = b.value();
  for (std::size_t i = 0; i < take_a.size(); ++i) {
    if (take_a[i]) std::copy(a.value().row(i).begin(), a.value().row(i).end(), y.row(i).begin());
  }
  return t.record(std::move(y), {a.id, b.id},
                  [a = a.id, b = b.id, take_a](Tape& t, std::size_t self) {
                    const Matrix& g = t.grad(self);
                    for (auto [id, want] : {std::pair{a, true}, std::pair{b, false}}) {
                      accumulate(t, id, [&](Matrix& gi) {
                        for (std::size_t i = 0; i < g.rows(); ++i) {
                          if (take_a[i] != want) continue;
                          for (std::size_t j = 0; j < g.cols(); ++j) gi(i, j) += g(i, j);
                        }
                      });
                    }
                  });
}

Var mean(Var a, int axis) {
  const Matrix& x = a.value();
  if (axis != 0 && axis != 1) throw std::invalid_argument("mean: axis must be 0 or 1");
  if (x.empty()) throw ShapeError("mean: empty input");
  Matrix y = axis == 0 ? Matrix(1, x.cols()) : Matrix(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) (axis == 0 ? y[j] : y[i]) += x(i, j);
  const double n = axis == 0 ? static_cast<double>(x.rows()) : static_cast<double>(x.cols());
  for (auto& v : y.data()) v /= n;
  return a.tape->record(std::move(y), {a.id}, [a = a.id, axis, n](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < ga.rows(); ++i)
        for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += (axis == 0 ? g[j] : g[i]) / n;
    });
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape->record(Matrix(1, 1, s), {a.id}, [a = a.id](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    accumulate(t, a, [&](Matrix& ga) {
      for (auto& v : ga.data()) v += g;
    });
  });
}

Var layer_norm_rows(Var a, double eps) {
  const Matrix& x = a.value();
  const std::size_t n = x.cols();
  Matrix y(x.rows(), n);
  auto inv_std = std::make_shared<std::vector<double>>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mu = 0.0;
    for (double v : x.row(i)) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x.row(i)) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (std::size_t j = 0; j < n; ++j) y(i, j) = (x(i, j) - mu) * is;
  }
  return a.tape->record(std::move(y), {a.id}, [a = a.id, inv_std](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    accumulate(t, a, [&](Matrix& ga) {
      const double n = static_cast<double>(y.cols());
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double gm = 0.0, gy = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) {
          gm += g(i, j);
          gy += g(i, j) * y(i, j);
        }
        gm /= n;
        gy /= n;
        for (std::size_t j = 0; j < y.cols(); ++j)
          ga(i, j) += (*inv_std)[i] * (g(i, j) - gm - y(i, j) * gy);
      }
    });
  });
}

Var standardize_cols(Var a, double floor) {
  const Matrix& x = a.value();
  const std::size_t m = x.rows();
  Matrix y(m, x.cols());
  auto inv_std = std::make_shared<std::vector<double>>(x.cols());
  auto floored = std::make_shared<std::vector<bool>>(x.cols(), false);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < m; ++i) mu += x(i, j);
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) var += (x(i, j) - mu) * (x(i, j) - mu);
    var /= static_cast<double>(m);
    double sd = std::sqrt(var);
    if (sd < floor) {
      sd = floor;
      (*floored)[j] = true;
      a.tape->note_std_floor_hit();
    }
    (*inv_std)[j] = 1.0 / sd;
    for (std::size_t i = 0; i < m; ++i) y(i, j) = (x(i, j) - mu) / sd;
  }
  return a.tape->record(std::move(y), {a.id}, [a = a.id, inv_std, floored](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    accumulate(t, a, [&](Matrix& ga) {
      const double m = static_cast<double>(y.rows());
      for (std::size_t j = 0; j < y.cols(); ++j) {
        double gm = 0.0, gy = 0.0;
        for (std::size_t i = 0; i < y.rows(); ++i) {
          gm += g(i, j);
          gy += g(i, j) * y(i, j);
        }
        gm /= m;
        gy /= m;
        // A floored std is a constant, so only the centering term remains.
        if ((*floored)[j]) gy = 0.0;
        for (std::size_t i = 0; i < y.rows(); ++i)
          ga(i, j) += (*inv_std)[j] * (g(i, j) - gm - y(i, j) * gy);
      }
    });
  });
}

Var normalize_cols(Var a, double floor) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  auto norms = std::make_shared<std::vector<double>>(x.cols());
  auto floored = std::make_shared<std::vector<bool>>(x.cols(), false);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, j) * x(i, j);
    double nrm = std::sqrt(s);
    if (nrm < floor) {
      nrm = floor;
      (*floored)[j] = true;
    }
    (*norms)[j] = nrm;
    for (std::size_t i = 0; i < x.rows(); ++i) y(i, j) = x(i, j) / nrm;
  }
  return a.tape->record(std::move(y), {a.id}, [a = a.id, norms, floored](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    accumulate(t, a, [&](Matrix& ga) {
      for (std::size_t j = 0; j < y.cols(); ++j) {
        double dot = 0.0;
        if (!(*floored)[j])
          for (std::size_t i = 0; i < y.rows(); ++i) dot += y(i, j) * g(i, j);
        for (std::size_t i = 0; i < y.rows(); ++i)
          ga(i, j) += (g(i, j) - y(i, j) * dot) / (*norms)[j];
      }
    });
  });
}

AttentionResult multi_head_attention(Var q, Var k, Var v, const AttentionLayout& layout) {
  Tape& t = tape_of(q, k);
  tape_of(q, v);
  const std::size_t rows = layout.batch * layout.steps;
  if (!q.value().same_shape(k.value())) shape_error("attention(q,k)", q.value(), k.value());
  if (!q.value().same_shape(v.value())) shape_error("attention(q,v)", q.value(), v.value());
  if (q.rows() != rows || layout.valid.size() != layout.batch || layout.heads == 0 ||
      q.cols() % layout.heads != 0) {
    throw ShapeError("attention: layout batch=" + std::to_string(layout.batch) +
                     " steps=" + std::to_string(layout.steps) + " heads=" +
                     std::to_string(layout.heads) + " does not fit shape " + q.value().shape_str());
  }
  for (auto n : layout.valid) {
    if (n == 0 || n > layout.steps) throw ShapeError("attention: invalid valid-length " + std::to_string(n));
  }
  const std::size_t width = q.cols();
  const std::size_t dh = width / layout.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t T = layout.steps;

  auto probs = std::make_shared<std::vector<Matrix>>();
  probs->reserve(layout.batch * layout.heads);
  const Matrix& Q = q.value();
  const Matrix& K = k.value();
  const Matrix& V = v.value();
  Matrix out(rows, width);
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const std::size_t base = b * T;
    const std::size_t nv = layout.valid[b];
    for (std::size_t h = 0; h < layout.heads; ++h) {
      const std::size_t c0 = h * dh;
      Matrix P(T, T);
      for (std::size_t i = 0; i < T; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < nv; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += Q(base + i, c0 + c) * K(base + j, c0 + c);
          P(i, j) = s * inv_sqrt;
          mx = std::max(mx, P(i, j));
        }
        double z = 0.0;
        for (std::size_t j = 0; j < nv; ++j) z += (P(i, j) = std::exp(P(i, j) - mx));
        for (std::size_t j = 0; j < nv; ++j) P(i, j) /= z;
        for (std::size_t j = 0; j < nv; ++j) {
          const double p = P(i, j);
          for (std::size_t c = 0; c < dh; ++c) out(base + i, c0 + c) += p * V(base + j, c0 + c);
        }
      }
      probs->push_back(std::move(P));
    }
  }

  Var o = t.record(std::move(out), {q.id, k.id, v.id},
                   [q = q.id, k = k.id, v = v.id, layout, probs, dh, inv_sqrt](Tape& t, std::size_t self) {
                     const Matrix& G = t.grad(self);
                     const Matrix& Q = t.value(q);
                     const Matrix& K = t.value(k);
                     const Matrix& V = t.value(v);
                     Matrix dQ(Q.rows(), Q.cols()), dK(K.rows(), K.cols()), dV(V.rows(), V.cols());
                     const std::size_t T = layout.steps;
                     std::vector<double> dP(T);
                     for (std::size_t b = 0; b < layout.batch; ++b) {
                       const std::size_t base = b * T;
                       const std::size_t nv = layout.valid[b];
                       for (std::size_t h = 0; h < layout.heads; ++h) {
                         const Matrix& P = (*probs)[b * layout.heads + h];
                         const std::size_t c0 = h * dh;
                         for (std::size_t i = 0; i < T; ++i) {
                           double rowdot = 0.0;
                           for (std::size_t j = 0; j < nv; ++j) {
                             double s = 0.0;
                             for (std::size_t c = 0; c < dh; ++c) {
                               s += G(base + i, c0 + c) * V(base + j, c0 + c);
                               dV(base + j, c0 + c) += P(i, j) * G(base + i, c0 + c);
                             }
                             dP[j] = s;
                             rowdot += s * P(i, j);
                           }
                           for (std::size_t j = 0; j < nv; ++j) {
                             const double ds = P(i, j) * (dP[j] - rowdot) * inv_sqrt;
                             for (std::size_t c = 0; c < dh; ++c) {
                               dQ(base + i, c0 + c) += ds * K(base + j, c0 + c);
                               dK(base + j, c0 + c) += ds * Q(base + i, c0 + c);
                             }
                           }
                         }
                       }
                     }
                     for (auto [id, d] : {std::pair{q, &dQ}, std::pair{k, &dK}, std::pair{v, &dV}}) {
                       accumulate(t, id, [&](Matrix& gi) {
                         for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += (*d)[i];
                       });
                     }
                   });
  return AttentionResult{o, probs};
}

}  // namespace abacus::num
