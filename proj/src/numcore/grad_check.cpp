#include "abacus/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace abacus::num {

namespace {
double eval_loss(const LossBuilder& build) {
  Tape tape;
  return build(tape).scalar();
}
}  // namespace

GradCheckReport grad_check(const LossBuilder& build, ParamStore& params, double step, double tol,
                           double abs_floor) {
  params.zero_grad();
  double loss = 0.0;
  {
    Tape tape;
    Var l = build(tape);
    loss = l.scalar();
    tape.backward(l);
  }
  // Central differences cannot resolve gradients below their own rounding noise.
  const double noise = 100.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(loss)) / step;
  const double floor = std::max(abs_floor, noise / tol);
  GradCheckReport report;
  for (auto* p : params.all()) {
    ParamCheck check{p->name};
    const Matrix analytic = p->grad;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + step;
      const double up = eval_loss(build);
      p->value[i] = orig - step;
      const double down = eval_loss(build);
      p->value[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      check.max_abs_error = std::max(check.max_abs_error, abs_err);
      check.max_rel_error = std::max(check.max_rel_error, abs_err / denom);
    }
    check.passed = check.max_rel_error < tol;
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.passed = report.passed && check.passed;
    report.params.push_back(std::move(check));
  }
  params.zero_grad();
  return report;
}

}  // namespace abacus::num
