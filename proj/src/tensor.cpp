#include "masstool/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace masstool {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shp) {
  std::size_t n = 1;
  for (std::size_t d : shp) {
    if (d == 0) raise(Errc::dim_mismatch, "tensor dimension must be positive");
    n *= d;
  }
  return n;
}

TensorPtr make_node(std::vector<std::size_t> shp, std::vector<double> values,
                    std::vector<TensorPtr> parents, std::function<void(Tensor&)> bw) {
  bool req = false;
  for (const auto& p : parents) req = req || p->requires_grad;
  auto t = std::make_shared<Tensor>(std::move(shp), std::move(values), req);
  if (req) {
    t->parents = std::move(parents);
    t->backward_fn = std::move(bw);
  }
  return t;
}

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
  if (a->shape != b->shape) raise(Errc::dim_mismatch, std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shp, std::vector<double> values, bool req)
    : shape(std::move(shp)), data(std::move(values)), requires_grad(req) {
  if (shape_product(shape) != data.size())
    raise(Errc::dim_mismatch, "tensor data length does not match shape");
}

double Tensor::value() const {
  if (!is_scalar()) raise(Errc::dim_mismatch, "value() on non-scalar tensor");
  return data[0];
}

void Tensor::ensure_grad() {
  if (requires_grad && grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (requires_grad) grad.assign(data.size(), 0.0);
}

TensorPtr constant(std::vector<double> values) {
  std::size_t n = values.size();
  return std::make_shared<Tensor>(std::vector<std::size_t>{n}, std::move(values), false);
}

TensorPtr constant(double value) {
  return std::make_shared<Tensor>(std::vector<std::size_t>{1}, std::vector<double>{value}, false);
}

TensorPtr constant_matrix(std::size_t r, std::size_t c, std::vector<double> values) {
  return std::make_shared<Tensor>(std::vector<std::size_t>{r, c}, std::move(values), false);
}

TensorPtr parameter(std::vector<double> values) {
  std::size_t n = values.size();
  return std::make_shared<Tensor>(std::vector<std::size_t>{n}, std::move(values), true);
}

TensorPtr parameter_matrix(std::size_t r, std::size_t c, std::vector<double> values) {
  return std::make_shared<Tensor>(std::vector<std::size_t>{r, c}, std::move(values), true);
}

namespace ops {

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
  return make_node(a->shape, std::move(out), {a, b}, [](Tensor& t) {
    for (int side = 0; side < 2; ++side) {
      Tensor& p = *t.parents[side];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (std::size_t i = 0; i < t.size(); ++i) p.grad[i] += t.grad[i];
    }
  });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
  return make_node(a->shape, std::move(out), {a, b}, [](Tensor& t) {
    Tensor& pa = *t.parents[0];
    Tensor& pb = *t.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < t.size(); ++i) pa.grad[i] += t.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < t.size(); ++i) pb.grad[i] -= t.grad[i];
    }
  });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
  return make_node(a->shape, std::move(out), {a, b}, [](Tensor& t) {
    Tensor& pa = *t.parents[0];
    Tensor& pb = *t.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < t.size(); ++i) pa.grad[i] += t.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < t.size(); ++i) pb.grad[i] += t.grad[i] * pa.data[i];
    }
  });
}

TensorPtr affine(const TensorPtr& x, double scale, double shift) {
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * x->data[i] + shift;
  return make_node(x->shape, std::move(out), {x}, [scale](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < t.size(); ++i) p.grad[i] += scale * t.grad[i];
  });
}

TensorPtr matvec(const TensorPtr& m, const TensorPtr& x) {
  if (!m->is_matrix() || !x->is_vector() || m->cols() != x->size())
    raise(Errc::dim_mismatch, "matvec: incompatible shapes");
  std::size_t r = m->rows(), c = m->cols();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const double* mi = m->data.data() + i * c;
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += mi[j] * x->data[j];
    out[i] = s;
  }
  return make_node({r}, std::move(out), {m, x}, [r, c](Tensor& t) {
    Tensor& pm = *t.parents[0];
    Tensor& px = *t.parents[1];
    if (pm.requires_grad) {
      pm.ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) pm.grad[i * c + j] += t.grad[i] * px.data[j];
    }
    if (px.requires_grad) {
      px.ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) px.grad[j] += t.grad[i] * pm.data[i * c + j];
    }
  });
}

TensorPtr dot(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a->size(); ++i) s += a->data[i] * b->data[i];
  return make_node({1}, {s}, {a, b}, [](Tensor& t) {
    Tensor& pa = *t.parents[0];
    Tensor& pb = *t.parents[1];
    double g = t.grad[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < pa.size(); ++i) pa.grad[i] += g * pb.data[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < pb.size(); ++i) pb.grad[i] += g * pa.data[i];
    }
  });
}

TensorPtr relu(const TensorPtr& x) {
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
  return make_node(x->shape, std::move(out), {x}, [](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < t.size(); ++i)
      if (p.data[i] > 0.0) p.grad[i] += t.grad[i];
  });
}

TensorPtr sigmoid(const TensorPtr& x) {
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = masstool::sigmoid(x->data[i]);
  return make_node(x->shape, std::move(out), {x}, [](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < t.size(); ++i)
      p.grad[i] += t.grad[i] * t.data[i] * (1.0 - t.data[i]);
  });
}

TensorPtr l2_normalize(const TensorPtr& x) {
  if (!x->is_vector()) raise(Errc::dim_mismatch, "l2_normalize: vector expected");
  double n = norm2(x->span());
  if (n <= kZeroNormEps) raise(Errc::zero_norm, "l2_normalize: norm below 1e-12");
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] / n;
  return make_node(x->shape, std::move(out), {x}, [n](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    double yg = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) yg += t.data[i] * t.grad[i];
    for (std::size_t i = 0; i < t.size(); ++i)
      p.grad[i] += (t.grad[i] - t.data[i] * yg) / n;
  });
}

TensorPtr softmax(const TensorPtr& x) {
  if (!x->is_vector()) raise(Errc::dim_mismatch, "softmax: vector expected");
  Vec p = masstool::softmax(x->span());
  return make_node(x->shape, std::move(p), {x}, [](Tensor& t) {
    Tensor& px = *t.parents[0];
    if (!px.requires_grad) return;
    px.ensure_grad();
    double pg = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) pg += t.data[i] * t.grad[i];
    for (std::size_t i = 0; i < t.size(); ++i)
      px.grad[i] += t.data[i] * (t.grad[i] - pg);
  });
}

TensorPtr logsumexp(const TensorPtr& x) {
  if (!x->is_vector()) raise(Errc::dim_mismatch, "logsumexp: vector expected");
  double v = masstool::logsumexp(x->span());
  return make_node({1}, {v}, {x}, [](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    double g = t.grad[0];
    double lse = t.data[0];
    for (std::size_t i = 0; i < p.size(); ++i)
      p.grad[i] += g * std::exp(p.data[i] - lse);
  });
}

TensorPtr log(const TensorPtr& x) {
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(x->data[i]);
  return make_node(x->shape, std::move(out), {x}, [](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < t.size(); ++i) p.grad[i] += t.grad[i] / p.data[i];
  });
}

TensorPtr clamp(const TensorPtr& x, double lo, double hi) {
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(x->data[i], lo), hi);
  return make_node(x->shape, std::move(out), {x}, [lo, hi](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < t.size(); ++i)
      if (p.data[i] > lo && p.data[i] < hi) p.grad[i] += t.grad[i];
  });
}

TensorPtr sum(const TensorPtr& x) {
  double s = 0.0;
  for (double v : x->data) s += v;
  return make_node({1}, {s}, {x}, [](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < p.size(); ++i) p.grad[i] += t.grad[0];
  });
}

TensorPtr stack(const std::vector<TensorPtr>& scalars) {
  if (scalars.empty()) raise(Errc::dim_mismatch, "stack: empty input");
  std::vector<double> out(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) out[i] = scalars[i]->value();
  return make_node({scalars.size()}, std::move(out), scalars, [](Tensor& t) {
    for (std::size_t i = 0; i < t.parents.size(); ++i) {
      Tensor& p = *t.parents[i];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      p.grad[0] += t.grad[i];
    }
  });
}

TensorPtr concat(const TensorPtr& a, const TensorPtr& b) {
  if (!a->is_vector() || !b->is_vector()) raise(Errc::dim_mismatch, "concat: vectors expected");
  std::vector<double> out;
  out.reserve(a->size() + b->size());
  out.insert(out.end(), a->data.begin(), a->data.end());
  out.insert(out.end(), b->data.begin(), b->data.end());
  return make_node({a->size() + b->size()}, std::move(out), {a, b}, [](Tensor& t) {
    Tensor& pa = *t.parents[0];
    Tensor& pb = *t.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < pa.size(); ++i) pa.grad[i] += t.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < pb.size(); ++i) pb.grad[i] += t.grad[pa.size() + i];
    }
  });
}

TensorPtr combine(const std::vector<TensorPtr>& vecs, const TensorPtr& coeffs) {
  if (vecs.empty() || coeffs->size() != vecs.size())
    raise(Errc::dim_mismatch, "combine: coefficient/vector count mismatch");
  std::size_t d = vecs[0]->size();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    if (vecs[i]->size() != d) raise(Errc::dim_mismatch, "combine: vector length mismatch");
    for (std::size_t j = 0; j < d; ++j) out[j] += coeffs->data[i] * vecs[i]->data[j];
  }
  std::vector<TensorPtr> parents = vecs;
  parents.push_back(coeffs);
  std::size_t k = vecs.size();
  return make_node({d}, std::move(out), std::move(parents), [k, d](Tensor& t) {
    Tensor& pc = *t.parents[k];
    for (std::size_t i = 0; i < k; ++i) {
      Tensor& pv = *t.parents[i];
      if (pv.requires_grad) {
        pv.ensure_grad();
        for (std::size_t j = 0; j < d; ++j) pv.grad[j] += pc.data[i] * t.grad[j];
      }
      if (pc.requires_grad) {
        pc.ensure_grad();
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += t.grad[j] * pv.data[j];
        pc.grad[i] += s;
      }
    }
  });
}

TensorPtr lincomb(const std::vector<TensorPtr>& vecs, const std::vector<double>& coeffs) {
  if (vecs.empty() || coeffs.size() != vecs.size())
    raise(Errc::dim_mismatch, "lincomb: coefficient/vector count mismatch");
  std::size_t d = vecs[0]->size();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    if (vecs[i]->size() != d) raise(Errc::dim_mismatch, "lincomb: vector length mismatch");
    for (std::size_t j = 0; j < d; ++j) out[j] += coeffs[i] * vecs[i]->data[j];
  }
  return make_node({d}, std::move(out), vecs, [coeffs, d](Tensor& t) {
    for (std::size_t i = 0; i < t.parents.size(); ++i) {
      Tensor& p = *t.parents[i];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (std::size_t j = 0; j < d; ++j) p.grad[j] += coeffs[i] * t.grad[j];
    }
  });
}

TensorPtr row(const TensorPtr& m, std::size_t r) {
  if (!m->is_matrix() || r >= m->rows()) raise(Errc::dim_mismatch, "row: out of range");
  std::size_t c = m->cols();
  std::vector<double> out(m->data.begin() + r * c, m->data.begin() + (r + 1) * c);
  return make_node({c}, std::move(out), {m}, [r, c](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t j = 0; j < c; ++j) p.grad[r * c + j] += t.grad[j];
  });
}

TensorPtr fit_dim(const TensorPtr& x, std::size_t n) {
  if (!x->is_vector()) raise(Errc::dim_mismatch, "fit_dim: vector expected");
  std::vector<double> out(n, 0.0);
  std::size_t m = std::min(n, x->size());
  for (std::size_t i = 0; i < m; ++i) out[i] = x->data[i];
  return make_node({n}, std::move(out), {x}, [m](Tensor& t) {
    Tensor& p = *t.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < m; ++i) p.grad[i] += t.grad[i];
  });
}

TensorPtr detach(const TensorPtr& x) {
  return std::make_shared<Tensor>(x->shape, x->data, false);
}

}  // namespace ops

void backward(const TensorPtr& root) {
  if (!root->is_scalar()) raise(Errc::dim_mismatch, "backward: scalar root expected");
  if (!root->requires_grad) return;

  // Reverse postorder over parent edges = consumers before producers.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> seen;
  struct Frame {
    Tensor* t;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  seen.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.t->parents.size()) {
      Tensor* p = f.t->parents[f.next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.t);
      stack.pop_back();
    }
  }

  for (Tensor* t : order) t->grad.assign(t->data.size(), 0.0);
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* t = *it;
    if (t->backward_fn) t->backward_fn(*t);
  }
}

}  // namespace masstool
