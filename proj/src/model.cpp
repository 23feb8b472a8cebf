#include "masstool/model.hpp"

#include <algorithm>
#include <cmath>

#include "masstool/errors.hpp"

namespace masstool {

Model Model::init(const TrainConfig& cfg, std::size_t embed_dim, Rng& rng) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  m.embed_dim = embed_dim;
  m.hidden_dim = cfg.hidden_dim > 0 ? static_cast<std::size_t>(cfg.hidden_dim) : embed_dim;
  Rng init_rng = rng.split("init");
  m.detection = DetectionTower::init(embed_dim, m.hidden_dim, init_rng);
  if (!cfg.ablation.no_suim) {
    // identity + small noise: attention starts near raw dot-product similarity
    std::vector<double> w(embed_dim * embed_dim);
    for (std::size_t i = 0; i < embed_dim; ++i)
      for (std::size_t j = 0; j < embed_dim; ++j)
        w[i * embed_dim + j] = (i == j ? 1.0 : 0.0) + init_rng.uniform(-0.01, 0.01);
    m.suim_w = parameter_matrix(embed_dim, embed_dim, std::move(w));
  }
  if (!cfg.ablation.no_adakt)
    m.transfer = TransferFn::init(cfg.transfer_fn, m.hidden_dim, embed_dim, init_rng);
  return m;
}

std::vector<std::pair<std::string, TensorPtr>> Model::named_params() const {
  std::vector<std::pair<std::string, TensorPtr>> out = detection.named_params();
  if (suim_w) out.push_back({"suim.attn_w", suim_w});
  if (!cfg.ablation.no_adakt)
    for (auto& p : transfer.named_params()) out.push_back(p);
  if (q_nodes) out.push_back({"graph.q_nodes", q_nodes});
  if (t_nodes) out.push_back({"graph.t_nodes", t_nodes});
  return out;
}

void Model::quantize_to_f32() {
  for (auto& [name, p] : named_params())
    for (double& v : p->data) v = static_cast<double>(static_cast<float>(v));
}

NeighborSet EngineContext::neighbors_for(std::span<const double> sem_embedding,
                                         const std::string* exclude_id,
                                         const TrainConfig& cfg) const {
  NeighborSet raw = knn_search(pool, sem_embedding, cfg.knn_k, exclude_id);
  if (cfg.ablation.no_dynamic_filter) return dynamic_filter(raw, 1.0);
  return dynamic_filter(raw, cfg.epsilon);
}

namespace {

std::vector<TensorPtr> matrix_constants(const Matrix& m) {
  std::vector<TensorPtr> out;
  out.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out.push_back(constant(m.row_vec(i)));
  return out;
}

void values_from_tensors(const std::vector<TensorPtr>& ts, Matrix& out) {
  for (std::size_t i = 0; i < ts.size(); ++i)
    std::copy(ts[i]->data.begin(), ts[i]->data.end(), out.row(i));
}

}  // namespace

EngineContext build_context(Model& model, const Corpus& train_corpus,
                            const EmbeddingMatrix& qemb, const EmbeddingMatrix& temb) {
  if (qemb.dim != model.embed_dim || temb.dim != model.embed_dim)
    raise(Errc::dim_mismatch, "embedding dim does not match the model");
  EngineContext ctx;
  ctx.corpus = train_corpus;
  ctx.qemb = &qemb;
  ctx.temb = &temb;
  ctx.graphs = build_graphs(ctx.corpus, ctx.corpus.ret_indices, qemb, temb);

  if (model.cfg.trainable_embeddings && !model.q_nodes) {
    model.q_nodes = parameter_matrix(ctx.graphs.q0.rows, ctx.graphs.q0.cols, ctx.graphs.q0.a);
    model.t_nodes = parameter_matrix(ctx.graphs.t0.rows, ctx.graphs.t0.cols, ctx.graphs.t0.a);
  }
  if (model.q_nodes &&
      (model.q_nodes->rows() != ctx.graphs.q0.rows || model.t_nodes->rows() != ctx.graphs.t0.rows))
    raise(Errc::dim_mismatch, "trainable node embeddings do not match the training graph");

  const auto& qids = ctx.graphs.query_tool.left_ids;
  const auto& tids = ctx.graphs.query_tool.right_ids;
  for (std::size_t i = 0; i < qids.size(); ++i) ctx.query_row[qids[i]] = i;
  for (std::size_t i = 0; i < tids.size(); ++i) ctx.tool_row[tids[i]] = i;

  // Pool over the retrieval training queries, ids in canonical sorted order
  // (the graph's left id list is already sorted).
  ctx.pool.ids = qids;
  ctx.pool.index = ctx.query_row;
  ctx.pool.sem = Matrix(qids.size(), qemb.dim);
  for (std::size_t i = 0; i < qids.size(); ++i) {
    Vec v = qemb.row_vec(qemb.row_of(qids[i]));
    std::copy(v.begin(), v.end(), ctx.pool.sem.row(i));
  }

  refresh_context(ctx, model);

  // Neighbor caches for training: frozen semantic search, self excluded.
  ctx.train_neighbors.reserve(qids.size());
  for (std::size_t i = 0; i < qids.size(); ++i)
    ctx.train_neighbors.push_back(
        ctx.neighbors_for(ctx.pool.sem.row_span(i), &qids[i], model.cfg));
  return ctx;
}

void refresh_context(EngineContext& ctx, const Model& model) {
  int layers = model.cfg.gcn_layers;
  std::size_t dim = ctx.graphs.q0.cols;

  if (model.cfg.trainable_embeddings) {
    std::vector<TensorPtr> q0, t0, s0;
    for (std::size_t i = 0; i < ctx.graphs.q0.rows; ++i) q0.push_back(ops::row(model.q_nodes, i));
    for (std::size_t i = 0; i < ctx.graphs.t0.rows; ++i) t0.push_back(ops::row(model.t_nodes, i));
    // scene layer-0 rows pool their tools' trainable rows
    for (std::size_t s = 0; s < ctx.graphs.scenes.scene_count(); ++s) {
      const auto& tools = ctx.graphs.scenes.scene_tools[s];
      std::vector<TensorPtr> rows;
      std::vector<double> coeffs;
      for (const auto& tid : tools) {
        rows.push_back(t0[ctx.tool_row.at(tid)]);
        coeffs.push_back(1.0 / static_cast<double>(tools.size()));
      }
      s0.push_back(ops::lincomb(rows, coeffs));
    }
    auto [q_qt, t_qt] = propagate_tape(ctx.graphs.query_tool, q0, t0, layers);
    auto [q_qs, s_qs] = propagate_tape(ctx.graphs.query_scene, q0, s0, layers);
    ctx.q_qt_nodes = std::move(q_qt);
    ctx.q_qs_nodes = std::move(q_qs);
    ctx.s_qs_nodes = std::move(s_qs);
    ctx.t_graph_nodes = std::move(t_qt);
    ctx.q_graph_nodes.clear();
    for (std::size_t i = 0; i < ctx.q_qt_nodes.size(); ++i)
      ctx.q_graph_nodes.push_back(ops::add(ctx.q_qt_nodes[i], ctx.q_qs_nodes[i]));

    // keep value matrices in sync for evaluation and attention values
    Matrix q_qt_m(ctx.q_qt_nodes.size(), dim), t_qt_m(ctx.t_graph_nodes.size(), dim);
    Matrix q_qs_m(ctx.q_qs_nodes.size(), dim), s_qs_m(ctx.s_qs_nodes.size(), dim);
    values_from_tensors(ctx.q_qt_nodes, q_qt_m);
    values_from_tensors(ctx.t_graph_nodes, t_qt_m);
    values_from_tensors(ctx.q_qs_nodes, q_qs_m);
    values_from_tensors(ctx.s_qs_nodes, s_qs_m);
    ctx.reps = graph_reps(ctx.graphs, q_qt_m, t_qt_m, q_qs_m, s_qs_m);
  } else {
    auto [q_qt, t_qt] = propagate(ctx.graphs.query_tool, ctx.graphs.q0, ctx.graphs.t0, layers);
    auto [q_qs, s_qs] = propagate(ctx.graphs.query_scene, ctx.graphs.q0, ctx.graphs.s0, layers);
    ctx.reps = graph_reps(ctx.graphs, q_qt, t_qt, q_qs, s_qs);
    ctx.q_qt_nodes = matrix_constants(ctx.reps.q_qt);
    ctx.q_qs_nodes = matrix_constants(ctx.reps.q_qs);
    ctx.s_qs_nodes = matrix_constants(ctx.reps.s_qs);
    ctx.t_graph_nodes = matrix_constants(ctx.reps.t_graph);
    ctx.q_graph_nodes = matrix_constants(ctx.reps.q_graph);
  }

  ctx.pool.graph = ctx.reps.q_graph;

  ctx.tool_norm = Matrix(ctx.reps.t_graph.rows, dim);
  for (std::size_t i = 0; i < ctx.reps.t_graph.rows; ++i) {
    double n = norm2(ctx.reps.t_graph.row_span(i));
    if (n <= kZeroNormEps)
      raise(Errc::zero_norm, "tool " + ctx.reps.tool_ids[i] + " has a zero representation");
    for (std::size_t j = 0; j < dim; ++j) ctx.tool_norm.row(i)[j] = ctx.reps.t_graph.row(i)[j] / n;
  }
}

namespace {

TensorPtr fuse_terms(const std::vector<TensorPtr>& terms) {
  TensorPtr out;
  for (const auto& t : terms) {
    TensorPtr n = ops::l2_normalize(t);
    out = out ? ops::add(out, n) : n;
  }
  return out;
}

}  // namespace

QueryForward forward_query(const Model& model, const EngineContext& ctx,
                           std::span<const double> raw_embedding, const std::string* query_id,
                           const NeighborSet* neighbors) {
  QueryForward f;
  TensorPtr raw = constant(Vec(raw_embedding.begin(), raw_embedding.end()));
  auto det = detect(raw, model.detection);
  f.h = det.h;
  f.yhat = det.yhat;

  // Graph term: propagated row for training queries, degree-0 rule otherwise
  // (each of the two graphs contributes its layer-0 value).
  std::optional<std::size_t> row;
  if (query_id != nullptr) {
    auto it = ctx.query_row.find(*query_id);
    if (it != ctx.query_row.end()) row = it->second;
  }
  if (row) {
    f.e_graph = ctx.q_graph_nodes[*row];
  } else {
    Vec doubled(raw_embedding.size());
    for (std::size_t i = 0; i < doubled.size(); ++i) doubled[i] = 2.0 * raw_embedding[i];
    f.e_graph = constant(std::move(doubled));
  }

  if (model.cfg.ablation.no_suim) {
    f.e_search = f.e_graph;  // the graph-enhanced representation stands in
  } else {
    NeighborSet local;
    if (neighbors == nullptr) {
      local = ctx.neighbors_for(raw_embedding, nullptr, model.cfg);
      neighbors = &local;
    }
    f.e_search =
        intent_attention_nodes(f.e_graph, *neighbors, ctx.q_graph_nodes, model.suim_w);
  }

  std::vector<TensorPtr> terms = {f.e_graph, f.e_search};
  if (!model.cfg.ablation.no_adakt) {
    f.e_joint = adakt_transfer(f.h, f.e_search, model.transfer);
    terms.push_back(f.e_joint);
  }
  f.e_q = fuse_terms(terms);
  return f;
}

TensorPtr score_tool(const QueryForward& fwd, const EngineContext& ctx, std::size_t tool_row) {
  return ops::dot(fwd.e_q, ops::l2_normalize(ctx.t_graph_nodes[tool_row]));
}

RetrievalResult retrieve_topk(const Model& model, const EngineContext& ctx,
                              std::span<const double> raw_embedding, int k, double threshold) {
  if (ctx.tool_ids().empty()) raise(Errc::empty_tool_set, "retrieve_topk: no tools");
  if (k < 1) raise(Errc::config_error, "retrieve_topk: k must be >= 1");
  RetrievalResult res;
  QueryForward f = forward_query(model, ctx, raw_embedding, nullptr, nullptr);
  res.detection_prob = f.yhat->value();
  res.invoked = res.detection_prob >= threshold;
  if (!res.invoked) return res;

  const Vec& eq = f.e_q->data;
  res.ranked.reserve(ctx.tool_ids().size());
  for (std::size_t i = 0; i < ctx.tool_ids().size(); ++i)
    res.ranked.push_back({ctx.tool_ids()[i], dot(eq, ctx.tool_norm.row_span(i))});
  std::sort(res.ranked.begin(), res.ranked.end(), [](const RankedTool& a, const RankedTool& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tool_id < b.tool_id;
  });
  if (res.ranked.size() > static_cast<std::size_t>(k)) res.ranked.resize(k);
  return res;
}

}  // namespace masstool
