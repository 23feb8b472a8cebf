#pragma once

#include <string>
#include <vector>

#include "masstool/tensor.hpp"
#include "masstool/vecmath.hpp"

namespace masstool {

/// Per-query candidate set of size M: all golden tools plus sampled
/// negatives. tool_rows index an external tool table; golden marks which
/// entries belong to the query's golden set.
struct CandidateSlate {
  std::string query_id;
  std::vector<std::size_t> tool_rows;
  std::vector<std::uint8_t> golden;

  std::size_t size() const { return tool_rows.size(); }
  void validate() const;  // >=1 golden, >=1 negative, no duplicates
};

struct LossWeights {
  double lambda = 0.2;  // detection weight
  double beta = 0.04;   // contrastive weight
  double tau = 0.1;     // InfoNCE temperature
};

/// Binary cross-entropy, computed in log space with inputs clamped to
/// [1e-12, 1-1e-12]. The minimized form (leading negation) is used.
TensorPtr detection_loss(const TensorPtr& yhat, int label);
TensorPtr detection_loss_batch(const std::vector<TensorPtr>& yhat, const std::vector<int>& labels);

/// Ideal scoring distribution over a slate: uniform mass over golden entries.
Vec ideal_distribution(const CandidateSlate& slate);

/// Sampled list-wise retrieval loss: softmax of the scores against the ideal
/// distribution, with the complement cross-entropy term.
TensorPtr listwise_loss(const TensorPtr& scores, const CandidateSlate& slate);

/// Symmetric in-batch InfoNCE over query pairs (e_q_qs, e_q_qt) and scene
/// pairs (e_s_qs, e_s_qt); sim is the dot product; averaged with 1/|B|.
TensorPtr contrastive_loss(const std::vector<TensorPtr>& q_qs,
                           const std::vector<TensorPtr>& q_qt,
                           const std::vector<TensorPtr>& s_qs,
                           const std::vector<TensorPtr>& s_qt, double tau);

/// L = L_ret + lambda * L_det + beta * L_con.
TensorPtr total_loss(const TensorPtr& l_ret, const TensorPtr& l_det, const TensorPtr& l_con,
                     const LossWeights& weights);

}  // namespace masstool
