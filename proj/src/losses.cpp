#include "masstool/losses.hpp"

#include <set>

#include "masstool/errors.hpp"

namespace masstool {

namespace {

constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0 - 1e-12;

TensorPtr bce_term(const TensorPtr& p, double target) {
  // -[t log p + (1-t) log(1-p)] with clamping on both logs
  TensorPtr lp = ops::log(ops::clamp(p, kClampLo, kClampHi));
  TensorPtr lq = ops::log(ops::clamp(ops::affine(p, -1.0, 1.0), kClampLo, kClampHi));
  TensorPtr mix = ops::add(ops::affine(lp, target, 0.0), ops::affine(lq, 1.0 - target, 0.0));
  return ops::affine(mix, -1.0, 0.0);
}

}  // namespace

void CandidateSlate::validate() const {
  if (tool_rows.size() != golden.size())
    raise(Errc::dim_mismatch, "slate: golden mask size mismatch");
  if (tool_rows.size() < 2) raise(Errc::slate_too_small, "slate needs at least 2 entries");
  std::set<std::size_t> uniq(tool_rows.begin(), tool_rows.end());
  if (uniq.size() != tool_rows.size()) raise(Errc::parse_error, "slate contains duplicates");
  bool has_golden = false, has_negative = false;
  for (std::uint8_t g : golden) (g ? has_golden : has_negative) = true;
  if (!has_golden || !has_negative)
    raise(Errc::slate_too_small, "slate needs at least one golden and one negative entry");
}

TensorPtr detection_loss(const TensorPtr& yhat, int label) {
  if (!yhat->is_scalar()) raise(Errc::dim_mismatch, "detection_loss: scalar prediction expected");
  return bce_term(yhat, static_cast<double>(label));
}

TensorPtr detection_loss_batch(const std::vector<TensorPtr>& yhat,
                               const std::vector<int>& labels) {
  if (yhat.empty() || yhat.size() != labels.size())
    raise(Errc::dim_mismatch, "detection_loss_batch: size mismatch");
  TensorPtr acc;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    TensorPtr term = detection_loss(yhat[i], labels[i]);
    acc = acc ? ops::add(acc, term) : term;
  }
  return ops::affine(acc, 1.0 / static_cast<double>(yhat.size()), 0.0);
}

Vec ideal_distribution(const CandidateSlate& slate) {
  slate.validate();
  double n_golden = 0.0;
  for (std::uint8_t g : slate.golden) n_golden += g ? 1.0 : 0.0;
  Vec p(slate.size(), 0.0);
  for (std::size_t i = 0; i < slate.size(); ++i)
    if (slate.golden[i]) p[i] = 1.0 / n_golden;
  return p;
}

TensorPtr listwise_loss(const TensorPtr& scores, const CandidateSlate& slate) {
  if (scores->size() != slate.size())
    raise(Errc::dim_mismatch, "listwise_loss: score count does not match slate");
  Vec p = ideal_distribution(slate);
  TensorPtr phat = ops::softmax(scores);
  TensorPtr lp = ops::log(ops::clamp(phat, kClampLo, kClampHi));
  TensorPtr lq = ops::log(ops::clamp(ops::affine(phat, -1.0, 1.0), kClampLo, kClampHi));
  Vec q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[i] = 1.0 - p[i];
  TensorPtr mix = ops::add(ops::dot(constant(p), lp), ops::dot(constant(q), lq));
  return ops::affine(mix, -1.0, 0.0);
}

TensorPtr contrastive_loss(const std::vector<TensorPtr>& q_qs,
                           const std::vector<TensorPtr>& q_qt,
                           const std::vector<TensorPtr>& s_qs,
                           const std::vector<TensorPtr>& s_qt, double tau) {
  std::size_t b = q_qs.size();
  if (b < 2) raise(Errc::batch_too_small, "contrastive_loss: batch size must be >= 2");
  if (q_qt.size() != b || s_qs.size() != b || s_qt.size() != b)
    raise(Errc::dim_mismatch, "contrastive_loss: pair lists must have equal length");
  if (tau <= 0.0) raise(Errc::config_error, "contrastive_loss: tau must be positive");

  double inv_tau = 1.0 / tau;
  auto info_nce = [&](const std::vector<TensorPtr>& anchor, const std::vector<TensorPtr>& other) {
    TensorPtr acc;
    for (std::size_t i = 0; i < b; ++i) {
      std::vector<TensorPtr> logits;
      logits.reserve(b);
      for (std::size_t j = 0; j < b; ++j)
        logits.push_back(ops::affine(ops::dot(anchor[i], other[j]), inv_tau, 0.0));
      TensorPtr row = ops::stack(logits);
      TensorPtr term = ops::sub(ops::logsumexp(row), logits[i]);
      acc = acc ? ops::add(acc, term) : term;
    }
    return acc;
  };

  TensorPtr loss = ops::add(info_nce(q_qs, q_qt), info_nce(s_qs, s_qt));
  return ops::affine(loss, 1.0 / static_cast<double>(b), 0.0);
}

TensorPtr total_loss(const TensorPtr& l_ret, const TensorPtr& l_det, const TensorPtr& l_con,
                     const LossWeights& weights) {
  if (weights.lambda < 0.0 || weights.beta < 0.0 || weights.tau <= 0.0)
    raise(Errc::config_error, "total_loss: invalid weights");
  TensorPtr out = l_ret;
  out = ops::add(out, ops::affine(l_det, weights.lambda, 0.0));
  out = ops::add(out, ops::affine(l_con, weights.beta, 0.0));
  return out;
}

}  // namespace masstool
