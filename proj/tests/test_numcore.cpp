#include <cmath>
#include <set>

#include "abacus/numcore/adamw.hpp"
#include "abacus/numcore/grad_check.hpp"
#include "abacus/numcore/params.hpp"
#include "abacus/numcore/rng.hpp"
#include "abacus/numcore/tape.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace abacus;
using namespace abacus::num;
using testutil::random_matrix;

namespace {

/// Reduces any output to a scalar with fixed random weights so every
/// output element contributes a distinct gradient.
Var weighted_sum(Tape& tape, Var out, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(out, tape.constant(random_matrix(out.rows(), out.cols(), rng))));
}

void check_primitive(const std::string& label, std::vector<Matrix> inits,
                     const std::function<Var(Tape&, std::vector<Var>&)>& f) {
  ParamStore store;
  for (std::size_t i = 0; i < inits.size(); ++i) store.add("x" + std::to_string(i), inits[i]);
  auto report = grad_check(
      [&](Tape& tape) {
        std::vector<Var> xs;
        for (std::size_t i = 0; i < inits.size(); ++i) xs.push_back(tape.param(store.get("x" + std::to_string(i))));
        return weighted_sum(tape, f(tape, xs), 99);
      },
      store);
  INFO(label << " max rel err " << report.max_rel_error);
  CHECK(report.passed);
}

}  // namespace

TEST_CASE("matmul with the identity returns the operand") {
  Tape tape;
  Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  Var out = matmul(tape.constant(Matrix::identity(2)), tape.constant(m));
  CHECK(out.value() == m);
}

TEST_CASE("transposed products agree with explicit transposes") {
  Rng rng(1);
  Matrix a = random_matrix(4, 3, rng), b = random_matrix(4, 5, rng), c = random_matrix(6, 3, rng);
  CHECK(max_abs_diff(matmul_at_b(a, b), matmul(transpose(a), b)) < 1e-15);
  CHECK(max_abs_diff(matmul_a_bt(a, c), matmul(a, transpose(c))) < 1e-15);
}

TEST_CASE("softmax of equal logits is uniform and sigmoid(0) is one half") {
  Tape tape;
  Var s = softmax_rows(tape.constant(Matrix(1, 3, 0.0)));
  for (double v : s.value().data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(sigmoid(tape.constant(0.0)).scalar() == 0.5);
}

TEST_CASE("shape mismatches name the operation and both shapes") {
  Tape tape;
  Var a = tape.constant(Matrix(2, 3));
  Var b = tape.constant(Matrix(2, 3));
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    CHECK(what.find("matmul") != std::string::npos);
    CHECK(what.find("2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, tape.constant(Matrix(3, 2))), ShapeError);
  CHECK_THROWS_AS(slice_cols(a, 2, 5), ShapeError);
}

TEST_CASE("sum of squares has gradient 2p") {
  ParamStore store;
  auto& p = store.add("p", Matrix::from_rows({{1, 2}}));
  Tape tape;
  Var v = tape.param(p);
  tape.backward(sum(mul(v, v)));
  CHECK(p.grad[0] == 2.0);
  CHECK(p.grad[1] == 4.0);
}

TEST_CASE("cross-entropy of a softmax has gradient softmax minus one-hot") {
  ParamStore store;
  auto& o = store.add("o", Matrix::from_rows({{0.3, -1.2, 2.0, 0.5}}));
  const std::size_t k = 2;
  Tape tape;
  Var lp = log_softmax_rows(tape.param(o));
  tape.backward(scale(slice_cols(lp, k, k + 1), -1.0));
  const auto ls = testutil::log_softmax(o.value.row(0));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(o.grad[i] == doctest::Approx(std::exp(ls[i]) - (i == k ? 1.0 : 0.0)).epsilon(1e-13));
  }
}

TEST_CASE("backward rejects non-scalar losses and a second replay") {
  ParamStore store;
  auto& p = store.add("p", Matrix(2, 2, 1.0));
  Tape tape;
  Var v = tape.param(p);
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
  Var l = sum(v);
  tape.backward(l);
  CHECK_THROWS(tape.backward(l));
}

TEST_CASE("unreachable parameters keep a zero gradient") {
  ParamStore store;
  auto& used = store.add("used", Matrix(1, 2, 1.0));
  auto& unused = store.add("unused", Matrix(1, 2, 1.0));
  Tape tape;
  tape.param(unused);
  tape.backward(sum(square(tape.param(used))));
  CHECK(unused.grad == Matrix(1, 2, 0.0));
  CHECK(used.grad == Matrix(1, 2, 2.0));
}

TEST_CASE("a parameter used twice accumulates both contributions") {
  ParamStore store;
  auto& p = store.add("p", Matrix::from_rows({{3.0}}));
  Tape tape;
  Var a = tape.param(p);
  Var b = tape.param(p);
  tape.backward(add(mul(a, b), scale(a, 2.0)));
  CHECK(p.grad[0] == doctest::Approx(2 * 3.0 + 2.0));
}

TEST_CASE("every primitive matches central finite differences") {
  Rng rng(7);
  auto m = [&](std::size_t r, std::size_t c) { return random_matrix(r, c, rng); };
  auto pos = [&](std::size_t r, std::size_t c) { return random_matrix(r, c, rng, 0.2, 2.0); };

  check_primitive("matmul", {m(3, 4), m(4, 2)}, [](Tape&, auto& x) { return matmul(x[0], x[1]); });
  check_primitive("transpose", {m(3, 4)}, [](Tape&, auto& x) { return transpose(x[0]); });
  check_primitive("add", {m(3, 4), m(3, 4)}, [](Tape&, auto& x) { return add(x[0], x[1]); });
  check_primitive("sub", {m(3, 4), m(3, 4)}, [](Tape&, auto& x) { return sub(x[0], x[1]); });
  check_primitive("mul", {m(3, 4), m(3, 4)}, [](Tape&, auto& x) { return mul(x[0], x[1]); });
  check_primitive("add_row", {m(3, 4), m(1, 4)}, [](Tape&, auto& x) { return add_row(x[0], x[1]); });
  check_primitive("mul_row", {m(3, 4), m(1, 4)}, [](Tape&, auto& x) { return mul_row(x[0], x[1]); });
  check_primitive("scale", {m(3, 4)}, [](Tape&, auto& x) { return scale(x[0], -1.7); });
  check_primitive("add_scalar", {m(3, 4)}, [](Tape&, auto& x) { return add_scalar(x[0], 0.3); });
  check_primitive("sigmoid", {m(3, 4)}, [](Tape&, auto& x) { return sigmoid(x[0]); });
  check_primitive("tanh", {m(3, 4)}, [](Tape&, auto& x) { return tanh(x[0]); });
  check_primitive("log", {pos(3, 4)}, [](Tape&, auto& x) { return log(x[0]); });
  check_primitive("log_sigmoid", {m(3, 4)}, [](Tape&, auto& x) { return log_sigmoid(x[0]); });
  check_primitive("square", {m(3, 4)}, [](Tape&, auto& x) { return square(x[0]); });
  check_primitive("gelu", {m(3, 4)}, [](Tape&, auto& x) { return gelu(x[0]); });
  check_primitive("softmax_rows", {m(3, 5)}, [](Tape&, auto& x) { return softmax_rows(x[0]); });
  check_primitive("log_softmax_rows", {m(3, 5)}, [](Tape&, auto& x) { return log_softmax_rows(x[0]); });
  check_primitive("concat_cols", {m(3, 2), m(3, 4)}, [](Tape&, auto& x) { return concat_cols({x[0], x[1]}); });
  check_primitive("concat_rows", {m(2, 3), m(4, 3)}, [](Tape&, auto& x) { return concat_rows({x[0], x[1]}); });
  check_primitive("slice_cols", {m(3, 5)}, [](Tape&, auto& x) { return slice_cols(x[0], 1, 4); });
  check_primitive("gather_rows", {m(4, 3)}, [](Tape&, auto& x) { return gather_rows(x[0], {3, 0, 3, 2}); });
  check_primitive("select_rows", {m(4, 3), m(4, 3)},
                  [](Tape&, auto& x) { return select_rows({true, false, false, true}, x[0], x[1]); });
  check_primitive("mean axis 0", {m(4, 3)}, [](Tape&, auto& x) { return mean(x[0], 0); });
  check_primitive("mean axis 1", {m(4, 3)}, [](Tape&, auto& x) { return mean(x[0], 1); });
  check_primitive("sum", {m(4, 3)}, [](Tape&, auto& x) { return sum(x[0]); });
  check_primitive("layer_norm_rows", {m(4, 5)}, [](Tape&, auto& x) { return layer_norm_rows(x[0]); });
  check_primitive("standardize_cols", {m(6, 3)}, [](Tape&, auto& x) { return standardize_cols(x[0]); });
  check_primitive("normalize_cols", {m(6, 3)}, [](Tape&, auto& x) { return normalize_cols(x[0]); });
}

TEST_CASE("masked multi-head attention matches finite differences") {
  Rng rng(11);
  AttentionLayout layout{2, 4, 2, {4, 2}};
  const std::size_t rows = layout.batch * layout.steps;
  check_primitive("attention", {random_matrix(rows, 6, rng), random_matrix(rows, 6, rng), random_matrix(rows, 6, rng)},
                  [&](Tape&, auto& x) { return multi_head_attention(x[0], x[1], x[2], layout).out; });
}

TEST_CASE("attention probabilities are normalized and ignore padded keys") {
  Rng rng(12);
  AttentionLayout layout{2, 5, 1, {5, 3}};
  Tape tape;
  Var q = tape.constant(random_matrix(10, 4, rng));
  auto res = multi_head_attention(q, q, q, layout);
  for (const auto& p : *res.probs) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (double v : p.row(r)) s += v;
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
  const Matrix& p1 = (*res.probs)[1];  // second example, valid = 3
  for (std::size_t r = 0; r < p1.rows(); ++r)
    for (std::size_t c = 3; c < p1.cols(); ++c) CHECK(p1(r, c) == 0.0);
}

TEST_CASE("a random three-layer composite passes the gradient check") {
  Rng rng(3);
  ParamStore store;
  store.add("w1", random_matrix(5, 7, rng));
  store.add("b1", random_matrix(1, 7, rng));
  store.add("w2", random_matrix(7, 6, rng));
  store.add("w3", random_matrix(6, 3, rng));
  const Matrix x = random_matrix(4, 5, rng);
  auto report = grad_check(
      [&](Tape& t) {
        Var h1 = tanh(add_row(matmul(t.constant(x), t.param(store.get("w1"))), t.param(store.get("b1"))));
        Var h2 = layer_norm_rows(sigmoid(matmul(h1, t.param(store.get("w2")))));
        Var o = log_softmax_rows(matmul(h2, t.param(store.get("w3"))));
        return scale(sum(slice_cols(o, 0, 1)), -1.0);
      },
      store);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-4);
  CHECK(report.params.size() == 4);
}

TEST_CASE("grad_check flags a wrong backward") {
  ParamStore store;
  store.add("p", Matrix::from_rows({{0.5, -0.25}}));
  auto report = grad_check(
      [&](Tape& t) {
        Var p = t.param(store.get("p"));
        Matrix squared = p.value();
        for (auto& e : squared.data()) e *= e;
        // Forward is p^2 but the recorded backward claims 3p.
        Var bad = t.record(squared, {p.id}, [pid = p.id](Tape& tp, std::size_t self) {
          const Matrix g = tp.grad(self);
          Matrix& gp = tp.grad(pid);
          for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] * 3.0 * tp.value(pid)[i];
        });
        return sum(bad);
      },
      store);
  CHECK_FALSE(report.passed);
  CHECK(report.max_rel_error > 0.1);
}

TEST_CASE("standardize_cols floors a constant column and counts the hit") {
  Tape tape;
  Matrix x = Matrix::from_rows({{1.0, 2.0}, {1.0, 4.0}, {1.0, 9.0}});
  Var out = standardize_cols(tape.constant(x));
  CHECK(out.value().all_finite());
  for (std::size_t r = 0; r < 3; ++r) CHECK(out.value()(r, 0) == 0.0);
  CHECK(tape.std_floor_hits() == 1);
}

TEST_CASE("AdamW with zero gradient and zero decay leaves values unchanged") {
  ParamStore store;
  auto& p = store.add("p", Matrix::from_rows({{0.7, -1.3}}));
  const Matrix before = p.value;
  AdamW opt({0.1, 0.9, 0.999, 1e-8, 0.0, 5.0});
  for (int i = 0; i < 3; ++i) opt.step(store);
  CHECK(p.value == before);
  CHECK(opt.step_count() == 3);
}

TEST_CASE("AdamW moves w^2 downhill and zeroes gradients") {
  ParamStore store;
  auto& w = store.add("w", Matrix::from_rows({{1.0}}));
  AdamW opt({0.1});
  Tape tape;
  Var v = tape.param(w);
  tape.backward(mul(v, v));
  opt.step(store);
  CHECK(w.value[0] < 1.0);
  CHECK(w.grad[0] == 0.0);
}

TEST_CASE("AdamW matches a hand-written update with decay and clipping") {
  ParamStore store;
  auto& w = store.add("w", Matrix::from_rows({{1.0, -2.0}}));
  const AdamWConfig cfg{0.05, 0.9, 0.999, 1e-8, 0.1, 1.0};
  AdamW opt(cfg);
  double ref[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  const double grads[3][2] = {{3.0, 4.0}, {0.1, -0.2}, {-0.5, 0.05}};
  for (int t = 1; t <= 3; ++t) {
    w.grad[0] = grads[t - 1][0];
    w.grad[1] = grads[t - 1][1];
    const double norm = std::hypot(grads[t - 1][0], grads[t - 1][1]);
    const double c = norm > 1.0 ? 1.0 / norm : 1.0;
    for (int i = 0; i < 2; ++i) {
      const double g = grads[t - 1][i] * c;
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] = ref[i] * (1 - 0.05 * 0.1) - 0.05 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(opt.step(store) == doctest::Approx(norm));
    CHECK(w.value[0] == doctest::Approx(ref[0]).epsilon(1e-14));
    CHECK(w.value[1] == doctest::Approx(ref[1]).epsilon(1e-14));
  }
}

TEST_CASE("AdamW converges on a convex quadratic") {
  // f(w) = sum_i a_i (w_i - c_i)^2 with minimizer w* = c.
  ParamStore store;
  auto& w = store.add("w", Matrix::from_rows({{2.0, -1.0, 0.5}}));
  const double a[3] = {1.0, 3.0, 0.5}, c[3] = {-0.4, 0.9, 1.5};
  AdamW opt({0.05, 0.9, 0.999, 1e-8, 0.0, 5.0});
  for (int step = 0; step < 200; ++step) {
    for (int i = 0; i < 3; ++i) w.grad[i] = 2 * a[i] * (w.value[i] - c[i]);
    opt.step(store);
  }
  for (int i = 0; i < 3; ++i) CHECK(std::abs(w.value[i] - c[i]) < 1e-3);
}

TEST_CASE("AdamW aborts on a non-finite gradient and names the parameter") {
  ParamStore store;
  auto& a = store.add("enc.a", Matrix::from_rows({{1.0}}));
  auto& b = store.add("head.b", Matrix::from_rows({{1.0}}));
  a.grad[0] = 0.5;
  b.grad[0] = std::nan("");
  AdamW opt({0.1});
  try {
    opt.step(store);
    FAIL("expected NonFiniteGradient");
  } catch (const NonFiniteGradient& e) {
    CHECK(e.param() == "head.b");
    CHECK(std::string(e.what()).find("head.b") != std::string::npos);
  }
  CHECK(a.value[0] == 1.0);
  CHECK(opt.step_count() == 0);
}

TEST_CASE("ParamStore copies are deep and prefix copies check shapes") {
  ParamStore a;
  a.add("enc.w", Matrix(2, 2, 1.0));
  a.add("head.w", Matrix(1, 2, 3.0));
  ParamStore b = a;
  b.get("enc.w").value(0, 0) = 9.0;
  CHECK(a.get("enc.w").value(0, 0) == 1.0);

  ParamStore c;
  c.add("enc.w", Matrix(2, 2, 0.0));
  c.add("head.w", Matrix(1, 2, 0.0));
  CHECK(c.copy_values_from(b, "enc.") == 1);
  CHECK(c.get("enc.w").value(0, 0) == 9.0);
  CHECK(c.get("head.w").value(0, 0) == 0.0);

  ParamStore bad;
  bad.add("enc.w", Matrix(3, 2, 0.0));
  CHECK_THROWS(bad.copy_values_from(a, "enc."));
  CHECK_THROWS(a.add("enc.w", Matrix(1, 1)));
}

TEST_CASE("xavier init respects its bound and uses the seed") {
  Rng r1(5), r2(5);
  Matrix a = xavier_uniform(8, 16, r1), b = xavier_uniform(8, 16, r2);
  CHECK(a == b);
  const double bound = std::sqrt(6.0 / 24.0);
  for (double v : a.data()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("rng streams are reproducible and below() is unbiased") {
  CHECK(derive_seed({1, 2}) != derive_seed({2, 1}));
  CHECK(derive_seed({1, 2}) == derive_seed({1, 2}));
  Rng rng(42);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(6)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 6.0) * (c - n / 6.0) / (n / 6.0);
  CHECK(chi2 < 20.5);  // chi-square 5 dof, p = 0.001
  std::vector<int> perm{0, 1, 2, 3, 4, 5, 6};
  rng.shuffle(perm.begin(), perm.end());
  CHECK(std::set<int>(perm.begin(), perm.end()).size() == 7);
}
