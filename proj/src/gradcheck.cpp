#include "masstool/gradcheck.hpp"

#include <cmath>

namespace masstool {

namespace {

double eval_scalar(const std::function<TensorPtr()>& loss_fn) {
  double v = loss_fn()->value();
  if (!std::isfinite(v)) raise(Errc::non_finite, "grad_check: loss is not finite");
  return v;
}

}  // namespace

double grad_check(const std::function<TensorPtr()>& loss_fn,
                  const std::vector<TensorPtr>& params, double fd_step) {
  for (const auto& p : params) p->zero_grad();
  TensorPtr loss = loss_fn();
  if (!std::isfinite(loss->value())) raise(Errc::non_finite, "grad_check: loss is not finite");
  backward(loss);

  std::vector<Vec> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad);
  }
  loss.reset();  // free the tape before the FD sweep

  double max_err = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      double orig = p.data[i];
      p.data[i] = orig + fd_step;
      double fp = eval_scalar(loss_fn);
      p.data[i] = orig - fd_step;
      double fm = eval_scalar(loss_fn);
      p.data[i] = orig;
      double fd = (fp - fm) / (2.0 * fd_step);
      double err = std::abs(analytic[pi][i] - fd) / std::max(1.0, std::abs(fd));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace masstool
