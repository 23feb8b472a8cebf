#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "masstool/errors.hpp"
#include "masstool/vecmath.hpp"

namespace masstool {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Reverse-mode tape node. Shapes are {1} (scalar), {n} (vector) or {r,c}
/// (matrix). Interior nodes keep shared ownership of their parents so a loss
/// node pins the whole expression graph; dropping the root frees the tape.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized iff requires_grad and a backward pass touched it
  bool requires_grad = false;

  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backward_fn;

  Tensor(std::vector<std::size_t> shp, std::vector<double> values, bool req);

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return shape.size() == 1 && shape[0] == 1; }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  std::size_t rows() const { return shape[0]; }
  std::size_t cols() const { return shape.size() == 2 ? shape[1] : 1; }

  double value() const;  // scalar only
  std::span<const double> span() const { return {data.data(), data.size()}; }

  void ensure_grad();  // allocate zeroed grad buffer when requires_grad
  void zero_grad();
};

TensorPtr constant(std::vector<double> values);
TensorPtr constant(double value);
TensorPtr constant_matrix(std::size_t r, std::size_t c, std::vector<double> values);
TensorPtr parameter(std::vector<double> values);
TensorPtr parameter_matrix(std::size_t r, std::size_t c, std::vector<double> values);

namespace ops {

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);  // elementwise
TensorPtr affine(const TensorPtr& x, double scale, double shift);
TensorPtr matvec(const TensorPtr& m, const TensorPtr& x);
TensorPtr dot(const TensorPtr& a, const TensorPtr& b);
TensorPtr relu(const TensorPtr& x);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr l2_normalize(const TensorPtr& x);
TensorPtr softmax(const TensorPtr& x);
TensorPtr logsumexp(const TensorPtr& x);
TensorPtr log(const TensorPtr& x);
TensorPtr clamp(const TensorPtr& x, double lo, double hi);
TensorPtr sum(const TensorPtr& x);
TensorPtr stack(const std::vector<TensorPtr>& scalars);
TensorPtr concat(const TensorPtr& a, const TensorPtr& b);
/// sum_i coeffs[i] * vecs[i], gradient flows into both coefficients and vectors.
TensorPtr combine(const std::vector<TensorPtr>& vecs, const TensorPtr& coeffs);
/// sum_i coeffs[i] * vecs[i] with fixed coefficients.
TensorPtr lincomb(const std::vector<TensorPtr>& vecs, const std::vector<double>& coeffs);
TensorPtr row(const TensorPtr& m, std::size_t r);
/// Truncate or zero-pad a vector to length n (fixed, non-learnable map).
TensorPtr fit_dim(const TensorPtr& x, std::size_t n);
/// Constant copy of x's current values; cuts the gradient path.
TensorPtr detach(const TensorPtr& x);

}  // namespace ops

/// Reverse pass from a scalar root. Zeroes grads of every traversed node,
/// then accumulates. Single-writer per the concurrency contract.
void backward(const TensorPtr& root);

}  // namespace masstool
