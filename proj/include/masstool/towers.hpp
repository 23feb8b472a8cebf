#pragma once

#include <string>
#include <utility>
#include <vector>

#include "masstool/rng.hpp"
#include "masstool/tensor.hpp"

namespace masstool {

/// Detection tower: h = ReLU(A x + b), yhat = sigmoid(w . h + c).
struct DetectionTower {
  TensorPtr proj_w;  // hidden_dim x in_dim
  TensorPtr proj_b;  // hidden_dim
  TensorPtr head_w;  // hidden_dim
  TensorPtr head_b;  // scalar

  std::size_t in_dim() const { return proj_w->cols(); }
  std::size_t hidden_dim() const { return proj_w->rows(); }

  static DetectionTower init(std::size_t in_dim, std::size_t hidden_dim, Rng& rng);
  std::vector<std::pair<std::string, TensorPtr>> named_params() const;
};

struct DetectOut {
  TensorPtr h;     // detective knowledge
  TensorPtr yhat;  // scalar in (0,1)
};

DetectOut detect(const TensorPtr& query_embedding, const DetectionTower& tower);

enum class TransferKind { gating, attention, concatenation, addition };

TransferKind transfer_kind_from_string(const std::string& s);
const char* to_string(TransferKind k);

/// Transfer function fusing detective knowledge h into the retrieval-side
/// query representation. All variants output dimension d.
struct TransferFn {
  TransferKind kind = TransferKind::gating;
  // gating: sigmoid(G h + g) (element-wise gate over e_search)
  TensorPtr gate_w, gate_b;
  // attention: single-head scaled dot-product self-attention over the
  // two-token sequence [P h, e_search]; outputs summed element-wise
  TensorPtr attn_proj, attn_q, attn_k, attn_v;
  // concatenation: MLP over [h; e_search], one hidden layer of width d
  TensorPtr mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  // addition: fixed truncation/zero-pad of h, no learnable tensors

  static TransferFn init(TransferKind kind, std::size_t hidden_dim, std::size_t d, Rng& rng);
  std::vector<std::pair<std::string, TensorPtr>> named_params() const;
};

TensorPtr adakt_transfer(const TensorPtr& h, const TensorPtr& e_search, const TransferFn& fn);

/// Eq. 6/7 fusion and scoring: sum of the three L2-normalized query
/// representations, dotted with the normalized tool representation.
/// Score lies in [-3, 3]. Throws ZeroNorm for any zero input.
TensorPtr fuse_and_score(const TensorPtr& e_q_graph, const TensorPtr& e_q_search,
                         const TensorPtr& e_q_joint, const TensorPtr& e_t_graph);

struct RankedTool {
  std::string tool_id;
  double score;
};

struct RetrievalResult {
  double detection_prob = 0.0;
  bool invoked = false;
  std::vector<RankedTool> ranked;  // descending score, tool_id tie-break
};

}  // namespace masstool
