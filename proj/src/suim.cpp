#include "masstool/suim.hpp"

#include <algorithm>

#include "masstool/errors.hpp"

namespace masstool {

NeighborSet knn_search(const QueryPool& pool, std::span<const double> target_sem, int k,
                       const std::string* exclude_id) {
  if (pool.size() == 0) raise(Errc::empty_pool, "knn_search: empty query pool");
  if (k < 1) raise(Errc::dim_mismatch, "knn_search: k must be >= 1");
  if (target_sem.size() != pool.sem.cols)
    raise(Errc::dim_mismatch, "knn_search: target dim does not match pool");

  std::optional<std::size_t> skip;
  if (exclude_id != nullptr) {
    auto it = pool.index.find(*exclude_id);
    if (it != pool.index.end()) skip = it->second;
  }

  std::vector<Neighbor> all;
  all.reserve(pool.size());
  for (std::uint32_t i = 0; i < pool.size(); ++i) {
    if (skip && *skip == i) continue;
    all.push_back({i, cosine(target_sem, pool.sem.row_span(i))});
  }
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.pool_index < b.pool_index;
  };
  std::partial_sort(all.begin(), all.begin() + keep, all.end(), better);
  all.resize(keep);

  NeighborSet out;
  out.items = std::move(all);
  out.k_requested = k;
  return out;
}

NeighborSet dynamic_filter(const NeighborSet& neighbors, double epsilon) {
  if (epsilon < 0.0 || epsilon > 1.0)
    raise(Errc::config_error, "dynamic_filter: epsilon must lie in [0, 1]");
  NeighborSet out;
  out.k_requested = neighbors.k_requested;
  out.epsilon_applied = epsilon;
  if (epsilon >= 1.0) {  // sentinel: accept all top-K neighbors
    out.items = neighbors.items;
    return out;
  }
  for (const Neighbor& n : neighbors.items)
    if (n.score > epsilon) out.items.push_back(n);
  return out;
}

namespace {

TensorPtr attention_over(const TensorPtr& target, const std::vector<TensorPtr>& values,
                         const TensorPtr& attention_w) {
  std::vector<TensorPtr> logits;
  logits.reserve(values.size());
  for (const TensorPtr& rep : values)
    logits.push_back(ops::dot(target, ops::matvec(attention_w, rep)));
  TensorPtr alpha = ops::softmax(ops::stack(logits));
  return ops::combine(values, alpha);
}

void check_attention_shapes(const TensorPtr& target, const TensorPtr& attention_w) {
  if (!attention_w->is_matrix() || attention_w->rows() != attention_w->cols() ||
      attention_w->rows() != target->size())
    raise(Errc::dim_mismatch, "intent_attention: W must be d x d matching the query dim");
}

}  // namespace

TensorPtr intent_attention(const TensorPtr& target_graph_rep, const NeighborSet& neighbors,
                           const QueryPool& pool, const TensorPtr& attention_w) {
  check_attention_shapes(target_graph_rep, attention_w);
  if (neighbors.items.empty()) return target_graph_rep;
  std::vector<TensorPtr> values;
  values.reserve(neighbors.items.size());
  for (const Neighbor& n : neighbors.items)
    values.push_back(constant(pool.graph.row_vec(n.pool_index)));
  return attention_over(target_graph_rep, values, attention_w);
}

TensorPtr intent_attention_nodes(const TensorPtr& target_graph_rep, const NeighborSet& neighbors,
                                 const std::vector<TensorPtr>& node_reps,
                                 const TensorPtr& attention_w) {
  check_attention_shapes(target_graph_rep, attention_w);
  if (neighbors.items.empty()) return target_graph_rep;
  std::vector<TensorPtr> values;
  values.reserve(neighbors.items.size());
  for (const Neighbor& n : neighbors.items) values.push_back(node_reps[n.pool_index]);
  return attention_over(target_graph_rep, values, attention_w);
}

}  // namespace masstool
