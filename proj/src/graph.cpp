#include "masstool/graph.hpp"

#include <algorithm>
#include <cmath>

#include "masstool/errors.hpp"

namespace masstool {

BipartiteGraph BipartiteGraph::build(std::vector<std::string> left_ids,
                                     std::vector<std::string> right_ids,
                                     std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
  BipartiteGraph g;
  g.left_ids = std::move(left_ids);
  g.right_ids = std::move(right_ids);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.left_degree.assign(g.left_ids.size(), 0);
  g.right_degree.assign(g.right_ids.size(), 0);
  for (auto [l, r] : edges) {
    if (l >= g.left_ids.size() || r >= g.right_ids.size())
      raise(Errc::dim_mismatch, "edge index out of range");
    g.left_degree[l] += 1;
    g.right_degree[r] += 1;
  }
  g.edges = std::move(edges);
  return g;
}

GraphBundle build_graphs(const Corpus& corpus, const std::vector<std::size_t>& ret_train,
                         const EmbeddingMatrix& query_emb, const EmbeddingMatrix& tool_emb) {
  GraphBundle b;

  std::vector<std::string> query_ids;
  query_ids.reserve(ret_train.size());
  for (std::size_t qi : ret_train) {
    const QueryRecord& q = corpus.queries[qi];
    if (q.golden_tools.empty())
      raise(Errc::empty_golden_set, "query " + q.query_id + " has no golden tools");
    query_ids.push_back(q.query_id);
  }
  std::sort(query_ids.begin(), query_ids.end());

  std::vector<std::string> tool_ids;
  tool_ids.reserve(corpus.tools.size());
  for (const auto& t : corpus.tools) tool_ids.push_back(t.tool_id);
  std::sort(tool_ids.begin(), tool_ids.end());
  std::unordered_map<std::string, std::uint32_t> tool_pos;
  for (std::uint32_t i = 0; i < tool_ids.size(); ++i) tool_pos[tool_ids[i]] = i;

  // Scenes keyed by golden tool tuple; labels assigned in sorted tuple order.
  std::map<std::vector<std::string>, std::vector<std::string>> scene_queries;
  for (std::size_t qi : ret_train) {
    const QueryRecord& q = corpus.queries[qi];
    scene_queries[q.golden_tools].push_back(q.query_id);
  }
  for (const auto& [tools, queries] : scene_queries) {
    std::size_t sid = b.scenes.scene_tools.size();
    b.scenes.scene_tools.push_back(tools);
    for (const auto& qid : queries) b.scenes.query_scene[qid] = sid;
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> qt_edges, qs_edges;
  for (std::uint32_t qi = 0; qi < query_ids.size(); ++qi) {
    const QueryRecord& q = corpus.query(query_ids[qi]);
    for (const auto& tid : q.golden_tools) qt_edges.push_back({qi, tool_pos.at(tid)});
    qs_edges.push_back({qi, static_cast<std::uint32_t>(b.scenes.query_scene.at(q.query_id))});
  }

  std::vector<std::string> scene_ids;
  for (std::size_t s = 0; s < b.scenes.scene_count(); ++s)
    scene_ids.push_back("s" + std::to_string(s));

  b.query_tool = BipartiteGraph::build(query_ids, tool_ids, std::move(qt_edges));
  b.query_scene = BipartiteGraph::build(query_ids, std::move(scene_ids), std::move(qs_edges));

  std::size_t dim = query_emb.dim;
  if (dim != tool_emb.dim) raise(Errc::dim_mismatch, "query/tool embedding dims differ");
  b.q0 = Matrix(query_ids.size(), dim);
  for (std::size_t i = 0; i < query_ids.size(); ++i) {
    Vec v = query_emb.row_vec(query_emb.row_of(b.query_tool.left_ids[i]));
    std::copy(v.begin(), v.end(), b.q0.row(i));
  }
  b.t0 = Matrix(tool_ids.size(), dim);
  for (std::size_t i = 0; i < tool_ids.size(); ++i) {
    Vec v = tool_emb.row_vec(tool_emb.row_of(b.query_tool.right_ids[i]));
    std::copy(v.begin(), v.end(), b.t0.row(i));
  }
  // e_s^0 = mean of member tools' layer-0 embeddings
  b.s0 = Matrix(b.scenes.scene_count(), dim);
  for (std::size_t s = 0; s < b.scenes.scene_count(); ++s) {
    const auto& tools = b.scenes.scene_tools[s];
    double* out = b.s0.row(s);
    for (const auto& tid : tools) {
      const double* tr = b.t0.row(tool_pos.at(tid));
      for (std::size_t j = 0; j < dim; ++j) out[j] += tr[j];
    }
    for (std::size_t j = 0; j < dim; ++j) out[j] /= static_cast<double>(tools.size());
  }
  return b;
}

std::pair<Matrix, Matrix> propagate(const BipartiteGraph& g, const Matrix& left0,
                                    const Matrix& right0, int layers) {
  if (left0.rows != g.left_ids.size() || right0.rows != g.right_ids.size())
    raise(Errc::dim_mismatch, "propagate: embedding rows do not cover the graph nodes");
  if (left0.cols != right0.cols) raise(Errc::dim_mismatch, "propagate: dims differ");
  std::size_t d = left0.cols;

  // Per-edge symmetric normalization 1/sqrt(|N_l| |N_r|).
  std::vector<double> w(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [l, r] = g.edges[e];
    w[e] = 1.0 / std::sqrt(static_cast<double>(g.left_degree[l]) *
                           static_cast<double>(g.right_degree[r]));
  }

  Matrix left_acc = left0, right_acc = right0;
  Matrix left_prev = left0, right_prev = right0;
  for (int layer = 0; layer < layers; ++layer) {
    Matrix left_next(left0.rows, d), right_next(right0.rows, d);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      auto [l, r] = g.edges[e];
      const double* rp = right_prev.row(r);
      const double* lp = left_prev.row(l);
      double* ln = left_next.row(l);
      double* rn = right_next.row(r);
      for (std::size_t j = 0; j < d; ++j) {
        ln[j] += w[e] * rp[j];
        rn[j] += w[e] * lp[j];
      }
    }
    for (std::size_t i = 0; i < left_acc.a.size(); ++i) left_acc.a[i] += left_next.a[i];
    for (std::size_t i = 0; i < right_acc.a.size(); ++i) right_acc.a[i] += right_next.a[i];
    left_prev = std::move(left_next);
    right_prev = std::move(right_next);
  }
  return {std::move(left_acc), std::move(right_acc)};
}

std::pair<std::vector<TensorPtr>, std::vector<TensorPtr>> propagate_tape(
    const BipartiteGraph& g, const std::vector<TensorPtr>& left0,
    const std::vector<TensorPtr>& right0, int layers) {
  if (left0.size() != g.left_ids.size() || right0.size() != g.right_ids.size())
    raise(Errc::dim_mismatch, "propagate_tape: embedding rows do not cover the graph nodes");

  // Neighbor lists with per-edge weights, fixed order.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> ln(left0.size()), rn(right0.size());
  for (auto [l, r] : g.edges) {
    double w = 1.0 / std::sqrt(static_cast<double>(g.left_degree[l]) *
                               static_cast<double>(g.right_degree[r]));
    ln[l].push_back({r, w});
    rn[r].push_back({l, w});
  }

  std::vector<TensorPtr> left_acc = left0, right_acc = right0;
  std::vector<TensorPtr> left_prev = left0, right_prev = right0;
  auto zeros_like = [](const TensorPtr& t) {
    return constant(std::vector<double>(t->size(), 0.0));
  };
  for (int layer = 0; layer < layers; ++layer) {
    std::vector<TensorPtr> left_next(left0.size()), right_next(right0.size());
    for (std::size_t i = 0; i < left0.size(); ++i) {
      if (ln[i].empty()) {
        left_next[i] = zeros_like(left0[i]);
        continue;
      }
      std::vector<TensorPtr> vecs;
      std::vector<double> coeffs;
      for (auto [r, w] : ln[i]) {
        vecs.push_back(right_prev[r]);
        coeffs.push_back(w);
      }
      left_next[i] = ops::lincomb(vecs, coeffs);
    }
    for (std::size_t i = 0; i < right0.size(); ++i) {
      if (rn[i].empty()) {
        right_next[i] = zeros_like(right0[i]);
        continue;
      }
      std::vector<TensorPtr> vecs;
      std::vector<double> coeffs;
      for (auto [l, w] : rn[i]) {
        vecs.push_back(left_prev[l]);
        coeffs.push_back(w);
      }
      right_next[i] = ops::lincomb(vecs, coeffs);
    }
    for (std::size_t i = 0; i < left0.size(); ++i)
      left_acc[i] = ops::add(left_acc[i], left_next[i]);
    for (std::size_t i = 0; i < right0.size(); ++i)
      right_acc[i] = ops::add(right_acc[i], right_next[i]);
    left_prev = std::move(left_next);
    right_prev = std::move(right_next);
  }
  return {std::move(left_acc), std::move(right_acc)};
}

GraphReps graph_reps(const GraphBundle& bundle, const Matrix& q_qt, const Matrix& t_qt,
                     const Matrix& q_qs, const Matrix& s_qs) {
  if (bundle.query_tool.left_ids != bundle.query_scene.left_ids)
    raise(Errc::id_mismatch, "graph_reps: query node lists differ between graphs");
  if (q_qt.rows != q_qs.rows || q_qt.cols != q_qs.cols)
    raise(Errc::dim_mismatch, "graph_reps: query representation shapes differ");
  GraphReps r;
  r.query_ids = bundle.query_tool.left_ids;
  r.tool_ids = bundle.query_tool.right_ids;
  r.q_qt = q_qt;
  r.t_qt = t_qt;
  r.q_qs = q_qs;
  r.s_qs = s_qs;
  r.q_graph = Matrix(q_qt.rows, q_qt.cols);
  for (std::size_t i = 0; i < q_qt.a.size(); ++i) r.q_graph.a[i] = q_qt.a[i] + q_qs.a[i];
  r.t_graph = t_qt;
  return r;
}

Vec scene_rep_from_tools(const SceneTable& scenes, std::size_t scene, const Matrix& t_qt,
                         const std::unordered_map<std::string, std::size_t>& tool_row) {
  if (scene >= scenes.scene_count()) raise(Errc::dim_mismatch, "scene index out of range");
  const auto& tools = scenes.scene_tools[scene];
  if (tools.empty()) raise(Errc::empty_scene, "scene has no tools");
  Vec out(t_qt.cols, 0.0);
  for (const auto& tid : tools) {
    const double* row = t_qt.row(tool_row.at(tid));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j];
  }
  for (double& v : out) v /= static_cast<double>(tools.size());
  return out;
}

}  // namespace masstool
