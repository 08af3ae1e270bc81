#pragma once

#include <functional>
#include <span>
#include <string>

#include "lcat/autodiff.hpp"

namespace lcat::ad {

struct FdCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates skipped because a perturbation crossed a LeakyReLU/PReLU kink.
  std::size_t excluded = 0;
  /// "name[index]" of the coordinate with the largest error.
  std::string worst;
};

using LossBuilder = std::function<Tensor(Tape&)>;

/// Compares backward() against (f(theta + h e) - f(theta - h e)) / 2h for every
/// coordinate of `params`. Relative error is |analytic - fd| / max(1, |analytic|).
/// A coordinate is excluded when either perturbation changes the sign pattern
/// of any piecewise-linear activation. Throws RuntimeFailure on non-finite f.
FdCheckResult finite_difference_check(const LossBuilder& f, std::span<Parameter* const> params, double step = 1e-5);

}  // namespace lcat::ad
