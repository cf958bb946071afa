#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "abacus/numcore/params.hpp"

namespace abacus::num {

struct AdamWConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  /// Global-norm gradient clip; <= 0 disables.
  double clip_norm = 5.0;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(const std::string& param)
      : std::runtime_error("non-finite gradient in parameter '" + param + "'"), param_(param) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

/// AdamW with decoupled weight decay. Moments are keyed by parameter name
/// and created lazily with the parameter's shape.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  /// One update over every parameter in `params`, then zeroes all grads.
  /// Throws NonFiniteGradient before touching any value if a grad is NaN/Inf.
  /// Returns the pre-clip global gradient norm.
  double step(ParamStore& params);
  /// Same as above restricted to a subset; only these grads are zeroed.
  double step(const std::vector<ParamArray*>& params);

  std::int64_t step_count() const { return step_; }
  const AdamWConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  AdamWConfig config_;
  std::int64_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace abacus::num
