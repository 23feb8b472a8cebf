#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "masstool/config.hpp"
#include "masstool/corpus.hpp"
#include "masstool/embedding.hpp"
#include "masstool/graph.hpp"
#include "masstool/suim.hpp"
#include "masstool/towers.hpp"

namespace masstool {

/// All learnable tensors plus the config snapshot they were built under.
struct Model {
  TrainConfig cfg;
  std::size_t embed_dim = 0;
  std::size_t hidden_dim = 0;

  DetectionTower detection;
  TensorPtr suim_w;      // null when no_suim
  TransferFn transfer;   // tensors null when no_adakt
  TensorPtr q_nodes;     // trainable graph node embeddings (matrices), else null
  TensorPtr t_nodes;

  static Model init(const TrainConfig& cfg, std::size_t embed_dim, Rng& rng);

  /// Fixed-order name -> tensor list; defines the checkpoint layout.
  std::vector<std::pair<std::string, TensorPtr>> named_params() const;

  /// Round every parameter through 32-bit storage so checkpoints round-trip
  /// to bit-identical behavior. Applied at the end of training.
  void quantize_to_f32();
};

/// Frozen serving/training context: graphs, propagated representations, the
/// SUIM query pool, and per-node tensors used by the forward pass. Node
/// tensors are constants in the default frozen mode and tape nodes when the
/// graph embeddings are trainable.
struct EngineContext {
  Corpus corpus;  // training corpus (graph source), owned
  const EmbeddingMatrix* qemb = nullptr;  // caller keeps embeddings alive
  const EmbeddingMatrix* temb = nullptr;

  GraphBundle graphs;
  GraphReps reps;
  QueryPool pool;
  std::unordered_map<std::string, std::size_t> query_row;
  std::unordered_map<std::string, std::size_t> tool_row;
  Matrix tool_norm;  // L2-normalized tool graph reps for fast scoring

  std::vector<TensorPtr> q_graph_nodes, t_graph_nodes;
  std::vector<TensorPtr> q_qt_nodes, q_qs_nodes, s_qs_nodes;

  std::vector<NeighborSet> train_neighbors;  // per pool row, self excluded

  const std::vector<std::string>& tool_ids() const { return reps.tool_ids; }

  /// Filtered neighbor set for an arbitrary embedding (inference path).
  NeighborSet neighbors_for(std::span<const double> sem_embedding,
                            const std::string* exclude_id, const TrainConfig& cfg) const;
};

/// Builds graphs from the training corpus, runs propagation, assembles the
/// query pool and neighbor caches. Attaches trainable node embeddings to the
/// model when the config asks for them (initialized from the frozen rows).
EngineContext build_context(Model& model, const Corpus& train_corpus,
                            const EmbeddingMatrix& qemb, const EmbeddingMatrix& temb);

/// Rebuilds per-node tensors (and, for trainable embeddings, re-runs
/// propagation on the tape) from the model's current parameter values; keeps
/// the plain matrices in sync for evaluation paths.
void refresh_context(EngineContext& ctx, const Model& model);

struct QueryForward {
  TensorPtr h, yhat;
  TensorPtr e_graph, e_search, e_joint;  // e_joint null when no_adakt
  TensorPtr e_q;                         // fused query representation
};

/// Full retrieval-tower forward pass for one query. query_id may be null for
/// unseen queries (degree-0 rule: each graph contributes its layer-0 value).
/// neighbors may be null to compute them from the pool on the fly.
QueryForward forward_query(const Model& model, const EngineContext& ctx,
                           std::span<const double> raw_embedding, const std::string* query_id,
                           const NeighborSet* neighbors);

/// On-tape score of one tool for a training slate.
TensorPtr score_tool(const QueryForward& fwd, const EngineContext& ctx, std::size_t tool_row);

/// Dual-step inference: detection gate, then a full scan over the tool set.
/// Ties broken by tool id; K is clamped to the tool count.
RetrievalResult retrieve_topk(const Model& model, const EngineContext& ctx,
                              std::span<const double> raw_embedding, int k, double threshold);

}  // namespace masstool
