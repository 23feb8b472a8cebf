#pragma once

#include <cstdint>

#include "masstool/tensor.hpp"

namespace masstool {

/// Standard Adam with bias correction. The paper names only the optimizer;
/// defaults follow the usual values.
struct AdamState {
  Vec m, v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr_) : m(n, 0.0), v(n, 0.0), lr(lr_) {}
};

/// One Adam update on param using its accumulated gradient; clears the
/// gradient afterwards. Throws MissingGrad when no gradient is populated.
void adam_step(Tensor& param, AdamState& state);

}  // namespace masstool
