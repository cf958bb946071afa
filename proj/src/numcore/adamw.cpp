#include "abacus/numcore/adamw.hpp"

#include <cmath>

namespace abacus::num {

double AdamW::step(ParamStore& params) { return step(params.all()); }

double AdamW::step(const std::vector<ParamArray*>& all) {
  double sq = 0.0;
  for (const auto* p : all) {
    if (!p->grad.all_finite()) throw NonFiniteGradient(p->name);
    for (double g : p->grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double clip =
      (config_.clip_norm > 0.0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;

  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const double decay = 1.0 - config_.lr * config_.weight_decay;

  for (auto* p : all) {
    auto [it, inserted] = moments_.try_emplace(p->name);
    auto& mom = it->second;
    if (inserted) {
      mom.m = Matrix(p->value.rows(), p->value.cols());
      mom.v = Matrix(p->value.rows(), p->value.cols());
    } else if (!mom.m.same_shape(p->value)) {
      throw std::invalid_argument("AdamW: parameter '" + p->name + "' changed shape");
    }
    auto w = p->value.data();
    auto g = p->grad.data();
    auto m = mom.m.data();
    auto v = mom.v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      w[i] *= decay;
      w[i] -= config_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.eps);
    }
    p->zero_grad();
  }
  return norm;
}

}  // namespace abacus::num
