#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "masstool/corpus.hpp"
#include "masstool/embedding.hpp"
#include "masstool/tensor.hpp"
#include "masstool/vecmath.hpp"

namespace masstool {

/// Undirected bipartite graph with per-node degrees. Edges are kept sorted
/// and deduplicated so neighbor summation order is fixed.
struct BipartiteGraph {
  std::vector<std::string> left_ids;
  std::vector<std::string> right_ids;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<std::uint32_t> left_degree;
  std::vector<std::uint32_t> right_degree;

  static BipartiteGraph build(std::vector<std::string> left_ids,
                              std::vector<std::string> right_ids,
                              std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);
};

/// Scene = golden tool set treated as one node. Queries with identical golden
/// sets share a scene; tool tuples are sorted and deduplicated.
struct SceneTable {
  std::vector<std::vector<std::string>> scene_tools;          // scene index -> sorted tool ids
  std::unordered_map<std::string, std::size_t> query_scene;   // query id -> scene index
  std::size_t scene_count() const { return scene_tools.size(); }
};

/// Graphs plus initial (layer-0) node embeddings, queries held row-aligned
/// with the graphs' id lists. Scene layer-0 rows are average pools of their
/// tools' layer-0 rows.
struct GraphBundle {
  BipartiteGraph query_tool;
  BipartiteGraph query_scene;
  SceneTable scenes;
  Matrix q0;  // aligned with query_tool.left_ids == query_scene.left_ids
  Matrix t0;  // aligned with query_tool.right_ids
  Matrix s0;  // aligned with query_scene.right_ids
};

/// Builds the two query-centric graphs from a retrieval training set.
/// Query-tool edges link each query to its golden tools; query-scene edges
/// link each query to the scene of its golden set. Tool nodes cover the whole
/// corpus so never-golden tools participate as degree-0 nodes.
GraphBundle build_graphs(const Corpus& corpus, const std::vector<std::size_t>& ret_train,
                         const EmbeddingMatrix& query_emb, const EmbeddingMatrix& tool_emb);

/// LightGCN propagation: per layer e_q^l = sum_{t in N_q} e_t^{l-1} /
/// sqrt(|N_q||N_t|) (and symmetrically), final representation = sum over
/// layers 0..L. Degree-0 nodes keep their layer-0 embedding exactly.
std::pair<Matrix, Matrix> propagate(const BipartiteGraph& g, const Matrix& left0,
                                    const Matrix& right0, int layers);

/// Tape variant used when initial embeddings are trainable; one tensor per node.
std::pair<std::vector<TensorPtr>, std::vector<TensorPtr>> propagate_tape(
    const BipartiteGraph& g, const std::vector<TensorPtr>& left0,
    const std::vector<TensorPtr>& right0, int layers);

/// Final representations of both graphs plus the fused forms
/// e_q_graph = e_q_qt + e_q_qs and e_t_graph = e_t_qt.
struct GraphReps {
  std::vector<std::string> query_ids;
  std::vector<std::string> tool_ids;
  Matrix q_qt, t_qt;
  Matrix q_qs, s_qs;
  Matrix q_graph, t_graph;
};

/// Fuses the two propagation results; the query node lists must agree.
GraphReps graph_reps(const GraphBundle& bundle, const Matrix& q_qt, const Matrix& t_qt,
                     const Matrix& q_qs, const Matrix& s_qs);

/// e_s_qt: average pooling of the scene's tools over their query-tool
/// representations. Throws EmptyScene for a scene with no tools.
Vec scene_rep_from_tools(const SceneTable& scenes, std::size_t scene, const Matrix& t_qt,
                         const std::unordered_map<std::string, std::size_t>& tool_row);

}  // namespace masstool
