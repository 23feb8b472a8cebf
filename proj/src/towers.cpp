#include "masstool/towers.hpp"

#include <cmath>

#include "masstool/errors.hpp"

namespace masstool {

namespace {

std::vector<double> uniform_init(std::size_t n, double bound, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return v;
}

std::vector<double> identity_plus_noise(std::size_t d, double noise, Rng& rng) {
  std::vector<double> v(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      v[i * d + j] = (i == j ? 1.0 : 0.0) + rng.uniform(-noise, noise);
  return v;
}

}  // namespace

DetectionTower DetectionTower::init(std::size_t in_dim, std::size_t hidden_dim, Rng& rng) {
  DetectionTower t;
  double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  t.proj_w = parameter_matrix(hidden_dim, in_dim, uniform_init(hidden_dim * in_dim, bound, rng));
  t.proj_b = parameter(uniform_init(hidden_dim, bound, rng));
  double hb = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  t.head_w = parameter(uniform_init(hidden_dim, hb, rng));
  t.head_b = parameter({0.0});
  return t;
}

std::vector<std::pair<std::string, TensorPtr>> DetectionTower::named_params() const {
  return {{"det.proj_w", proj_w}, {"det.proj_b", proj_b},
          {"det.head_w", head_w}, {"det.head_b", head_b}};
}

DetectOut detect(const TensorPtr& query_embedding, const DetectionTower& tower) {
  if (query_embedding->size() != tower.in_dim())
    raise(Errc::dim_mismatch, "detect: embedding dim does not match tower input");
  TensorPtr h = ops::relu(ops::add(ops::matvec(tower.proj_w, query_embedding), tower.proj_b));
  TensorPtr yhat = ops::sigmoid(ops::add(ops::dot(tower.head_w, h), tower.head_b));
  return {h, yhat};
}

TransferKind transfer_kind_from_string(const std::string& s) {
  if (s == "gating") return TransferKind::gating;
  if (s == "attention") return TransferKind::attention;
  if (s == "concatenation") return TransferKind::concatenation;
  if (s == "addition") return TransferKind::addition;
  raise(Errc::unknown_variant, "unknown transfer function: " + s);
}

const char* to_string(TransferKind k) {
  switch (k) {
    case TransferKind::gating: return "gating";
    case TransferKind::attention: return "attention";
    case TransferKind::concatenation: return "concatenation";
    case TransferKind::addition: return "addition";
  }
  return "?";
}

TransferFn TransferFn::init(TransferKind kind, std::size_t hidden_dim, std::size_t d, Rng& rng) {
  TransferFn fn;
  fn.kind = kind;
  double hb = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  double db = 1.0 / std::sqrt(static_cast<double>(d));
  switch (kind) {
    case TransferKind::gating:
      fn.gate_w = parameter_matrix(d, hidden_dim, uniform_init(d * hidden_dim, hb, rng));
      fn.gate_b = parameter(std::vector<double>(d, 0.0));
      break;
    case TransferKind::attention:
      fn.attn_proj = parameter_matrix(d, hidden_dim, uniform_init(d * hidden_dim, hb, rng));
      fn.attn_q = parameter_matrix(d, d, identity_plus_noise(d, 0.01, rng));
      fn.attn_k = parameter_matrix(d, d, identity_plus_noise(d, 0.01, rng));
      fn.attn_v = parameter_matrix(d, d, identity_plus_noise(d, 0.01, rng));
      break;
    case TransferKind::concatenation:
      fn.mlp_w1 =
          parameter_matrix(d, hidden_dim + d, uniform_init(d * (hidden_dim + d), hb, rng));
      fn.mlp_b1 = parameter(std::vector<double>(d, 0.0));
      fn.mlp_w2 = parameter_matrix(d, d, uniform_init(d * d, db, rng));
      fn.mlp_b2 = parameter(std::vector<double>(d, 0.0));
      break;
    case TransferKind::addition:
      break;  // not learnable
  }
  return fn;
}

std::vector<std::pair<std::string, TensorPtr>> TransferFn::named_params() const {
  switch (kind) {
    case TransferKind::gating:
      return {{"adakt.gate_w", gate_w}, {"adakt.gate_b", gate_b}};
    case TransferKind::attention:
      return {{"adakt.attn_proj", attn_proj},
              {"adakt.attn_q", attn_q},
              {"adakt.attn_k", attn_k},
              {"adakt.attn_v", attn_v}};
    case TransferKind::concatenation:
      return {{"adakt.mlp_w1", mlp_w1},
              {"adakt.mlp_b1", mlp_b1},
              {"adakt.mlp_w2", mlp_w2},
              {"adakt.mlp_b2", mlp_b2}};
    case TransferKind::addition:
      return {};
  }
  return {};
}

TensorPtr adakt_transfer(const TensorPtr& h, const TensorPtr& e_search, const TransferFn& fn) {
  std::size_t d = e_search->size();
  switch (fn.kind) {
    case TransferKind::gating: {
      if (fn.gate_w->cols() != h->size() || fn.gate_w->rows() != d)
        raise(Errc::dim_mismatch, "adakt gating: shape mismatch");
      TensorPtr gate = ops::sigmoid(ops::add(ops::matvec(fn.gate_w, h), fn.gate_b));
      return ops::mul(gate, e_search);
    }
    case TransferKind::attention: {
      if (fn.attn_proj->cols() != h->size() || fn.attn_proj->rows() != d)
        raise(Errc::dim_mismatch, "adakt attention: shape mismatch");
      TensorPtr u = ops::matvec(fn.attn_proj, h);
      std::vector<TensorPtr> tokens = {u, e_search};
      double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
      std::vector<TensorPtr> keys, vals, queries;
      for (const auto& t : tokens) {
        queries.push_back(ops::matvec(fn.attn_q, t));
        keys.push_back(ops::matvec(fn.attn_k, t));
        vals.push_back(ops::matvec(fn.attn_v, t));
      }
      TensorPtr out;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::vector<TensorPtr> logits;
        for (std::size_t j = 0; j < tokens.size(); ++j)
          logits.push_back(ops::affine(ops::dot(queries[i], keys[j]), inv_sqrt_d, 0.0));
        TensorPtr alpha = ops::softmax(ops::stack(logits));
        TensorPtr token_out = ops::combine(vals, alpha);
        out = out ? ops::add(out, token_out) : token_out;
      }
      return out;
    }
    case TransferKind::concatenation: {
      if (fn.mlp_w1->cols() != h->size() + d)
        raise(Errc::dim_mismatch, "adakt concatenation: shape mismatch");
      TensorPtr z = ops::concat(h, e_search);
      TensorPtr hidden = ops::relu(ops::add(ops::matvec(fn.mlp_w1, z), fn.mlp_b1));
      return ops::add(ops::matvec(fn.mlp_w2, hidden), fn.mlp_b2);
    }
    case TransferKind::addition:
      return ops::add(ops::fit_dim(h, d), e_search);
  }
  raise(Errc::unknown_variant, "adakt_transfer: unknown variant");
}

TensorPtr fuse_and_score(const TensorPtr& e_q_graph, const TensorPtr& e_q_search,
                         const TensorPtr& e_q_joint, const TensorPtr& e_t_graph) {
  TensorPtr e_q = ops::add(ops::add(ops::l2_normalize(e_q_graph), ops::l2_normalize(e_q_search)),
                           ops::l2_normalize(e_q_joint));
  return ops::dot(e_q, ops::l2_normalize(e_t_graph));
}

}  // namespace masstool
