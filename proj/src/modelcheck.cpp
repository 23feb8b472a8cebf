#include "masstool/modelcheck.hpp"

#include "masstool/gradcheck.hpp"
#include "masstool/losses.hpp"
#include "masstool/trainer.hpp"

namespace masstool {

namespace {

EmbeddingMatrix random_rows(const std::vector<std::string>& ids, std::size_t dim, Rng& rng) {
  std::vector<float> rows;
  rows.reserve(ids.size() * dim);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j)
      rows.push_back(static_cast<float>(rng.uniform(-1, 1)));
  return EmbeddingMatrix::from_rows(ids, dim, std::move(rows));
}

}  // namespace

double model_grad_check(TransferKind kind, const AblationFlags& ablation,
                        bool trainable_embeddings) {
  // 5 retrieval queries over 4 tools forming 2 scenes, 3 detection negatives.
  std::vector<ToolRecord> tools = {
      {"t1", "tool one"}, {"t2", "tool two"}, {"t3", "tool three"}, {"t4", "tool four"}};
  std::vector<QueryRecord> queries = {
      {"q1", "a", 1, {"t1", "t2"}}, {"q2", "b", 1, {"t1", "t2"}}, {"q3", "c", 1, {"t1", "t2"}},
      {"q4", "d", 1, {"t3", "t4"}}, {"q5", "e", 1, {"t3", "t4"}},
      {"n1", "f", 0, {}},           {"n2", "g", 0, {}},           {"n3", "h", 0, {}},
  };
  Corpus corpus = make_corpus(std::move(tools), std::move(queries));

  Rng data_rng(2024);
  std::vector<std::string> qids, tids;
  for (const auto& q : corpus.queries) qids.push_back(q.query_id);
  for (const auto& t : corpus.tools) tids.push_back(t.tool_id);
  std::size_t dim = 8;
  EmbeddingMatrix qemb = random_rows(qids, dim, data_rng);
  EmbeddingMatrix temb = random_rows(tids, dim, data_rng);

  TrainConfig cfg;
  cfg.transfer_fn = kind;
  cfg.ablation = ablation;
  cfg.trainable_embeddings = trainable_embeddings;
  cfg.hidden_dim = 5;  // differs from the embedding dim on purpose
  cfg.knn_k = 3;
  cfg.epsilon = 0.0;  // keep every positive-similarity neighbor
  cfg.gcn_layers = 2;
  cfg.slate_size = 4;
  cfg.lambda = 0.2;
  cfg.beta = 0.04;
  cfg.tau = 0.5;
  cfg.seed = 99;

  Rng rng(cfg.seed);
  Model model = Model::init(cfg, dim, rng);
  EngineContext ctx = build_context(model, corpus, qemb, temb);

  // Slates fixed up front so the loss closure is deterministic.
  Rng slate_rng = rng.split("slates");
  std::vector<CandidateSlate> slates;
  for (std::size_t row = 0; row < ctx.pool.size(); ++row)
    slates.push_back(
        sample_slate(ctx.corpus.query(ctx.pool.ids[row]), ctx, cfg.slate_size, slate_rng));

  LossWeights weights{cfg.lambda, cfg.beta, cfg.tau};
  auto loss_fn = [&]() -> TensorPtr {
    if (cfg.trainable_embeddings) refresh_context(ctx, model);

    TensorPtr l_ret;
    std::vector<TensorPtr> cq_qs, cq_qt, cs_qs, cs_qt;
    for (std::size_t row = 0; row < ctx.pool.size(); ++row) {
      const std::string& qid = ctx.pool.ids[row];
      Vec emb = qemb.row_vec(qemb.row_of(qid));
      QueryForward fwd = forward_query(model, ctx, emb, &qid, &ctx.train_neighbors[row]);
      std::vector<TensorPtr> scores;
      for (std::size_t t : slates[row].tool_rows) scores.push_back(score_tool(fwd, ctx, t));
      TensorPtr l = listwise_loss(ops::stack(scores), slates[row]);
      l_ret = l_ret ? ops::add(l_ret, l) : l;

      std::size_t scene = ctx.graphs.scenes.query_scene.at(qid);
      cq_qs.push_back(ctx.q_qs_nodes[row]);
      cq_qt.push_back(ctx.q_qt_nodes[row]);
      cs_qs.push_back(ctx.s_qs_nodes[scene]);
      std::vector<TensorPtr> rows;
      std::vector<double> coeffs;
      for (const auto& tid : ctx.graphs.scenes.scene_tools[scene]) {
        rows.push_back(ctx.t_graph_nodes[ctx.tool_row.at(tid)]);
        coeffs.push_back(1.0 / static_cast<double>(ctx.graphs.scenes.scene_tools[scene].size()));
      }
      cs_qt.push_back(ops::lincomb(rows, coeffs));
    }
    l_ret = ops::affine(l_ret, 1.0 / static_cast<double>(ctx.pool.size()), 0.0);

    TensorPtr l_con = contrastive_loss(cq_qs, cq_qt, cs_qs, cs_qt, cfg.tau);

    std::vector<TensorPtr> yhats;
    std::vector<int> labels;
    for (const auto& q : ctx.corpus.queries) {
      Vec emb = qemb.row_vec(qemb.row_of(q.query_id));
      yhats.push_back(detect(constant(emb), model.detection).yhat);
      labels.push_back(q.usage_label);
    }
    TensorPtr l_det = detection_loss_batch(yhats, labels);
    return total_loss(l_ret, l_det, l_con, weights);
  };

  std::vector<TensorPtr> params;
  for (auto& [name, p] : model.named_params()) params.push_back(p);
  return grad_check(loss_fn, params);
}

}  // namespace masstool
