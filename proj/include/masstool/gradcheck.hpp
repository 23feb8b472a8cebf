#pragma once

#include <functional>
#include <vector>

#include "masstool/tensor.hpp"

namespace masstool {

/// Central finite-difference check of reverse-mode gradients. loss_fn must
/// rebuild the scalar loss from the parameters' current values on every call.
/// Returns max over all parameter entries of
///   |analytic - fd| / max(1, |fd|),
/// with step 1e-5 in 64-bit arithmetic. Throws NonFinite if the loss is
/// NaN/Inf at any evaluation point.
double grad_check(const std::function<TensorPtr()>& loss_fn,
                  const std::vector<TensorPtr>& params, double fd_step = 1e-5);

}  // namespace masstool
