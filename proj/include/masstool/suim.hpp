#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "masstool/tensor.hpp"
#include "masstool/vecmath.hpp"

namespace masstool {

/// Global query pool over the retrieval training set. Ids are kept in sorted
/// order so ranking tie-breaks follow canonical id order, not insertion
/// order. sem rows are the frozen encoder embeddings used for search; graph
/// rows are the propagated representations used as attention values.
struct QueryPool {
  std::vector<std::string> ids;
  Matrix sem;
  Matrix graph;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t size() const { return ids.size(); }
};

struct Neighbor {
  std::uint32_t pool_index;
  double score;  // cosine similarity
};

struct NeighborSet {
  std::vector<Neighbor> items;  // sorted by score descending, index ascending on ties
  int k_requested = 0;
  double epsilon_applied = 1.0;  // 1.0 = sentinel, no filtering applied yet
};

/// Exhaustive top-K cosine scan over the pool's semantic embeddings.
/// exclude_id (the target itself during training) is never returned.
NeighborSet knn_search(const QueryPool& pool, std::span<const double> target_sem, int k,
                       const std::string* exclude_id = nullptr);

/// Keeps neighbors with score > epsilon (strict). epsilon = 1.0 is the
/// documented sentinel that disables filtering and keeps all K.
NeighborSet dynamic_filter(const NeighborSet& neighbors, double epsilon);

/// Intent attention: alpha ~ softmax over exp(e_q W e_n), output = weighted
/// sum of the neighbors' graph representations. Neighbor rows enter as
/// constants (frozen propagation), so only W and the target receive
/// gradients. An empty neighbor set falls back to the target's own
/// representation.
TensorPtr intent_attention(const TensorPtr& target_graph_rep, const NeighborSet& neighbors,
                           const QueryPool& pool, const TensorPtr& attention_w);

/// Same computation over explicit per-node tensors. With trainable graph
/// embeddings the rows are tape nodes and gradients flow through them.
TensorPtr intent_attention_nodes(const TensorPtr& target_graph_rep, const NeighborSet& neighbors,
                                 const std::vector<TensorPtr>& node_reps,
                                 const TensorPtr& attention_w);

}  // namespace masstool
