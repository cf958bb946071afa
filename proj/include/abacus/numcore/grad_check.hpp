#pragma once

#include <functional>
#include <string>
#include <vector>

#include "abacus/numcore/params.hpp"
#include "abacus/numcore/tape.hpp"

namespace abacus::num {

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  bool passed = true;
};

/// Builds a scalar loss on a fresh tape. Must be deterministic.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients with central differences element-wise.
/// Relative error is |a - n| / max(|a|, |n|, floor), where the floor is the
/// larger of `abs_floor` and the finite-difference rounding noise
/// 100 * eps * max(1, |loss|) / step divided by `tol`.
GradCheckReport grad_check(const LossBuilder& build, ParamStore& params, double step = 1e-5,
                           double tol = 1e-4, double abs_floor = 1e-6);

}  // namespace abacus::num
