#include "masstool/adam.hpp"

#include <cmath>

namespace masstool {

void adam_step(Tensor& param, AdamState& state) {
  if (!param.requires_grad || param.grad.size() != param.data.size())
    raise(Errc::missing_grad, "adam_step: parameter has no populated gradient");
  if (state.m.empty()) {
    state.m.assign(param.data.size(), 0.0);
    state.v.assign(param.data.size(), 0.0);
  }
  if (state.m.size() != param.data.size())
    raise(Errc::dim_mismatch, "adam_step: moment shape does not match parameter");

  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param.data.size(); ++i) {
    double g = param.grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    param.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
  param.zero_grad();
}

}  // namespace masstool
