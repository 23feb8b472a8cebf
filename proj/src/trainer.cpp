#include "masstool/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "masstool/adam.hpp"
#include "masstool/errors.hpp"
#include "masstool/metrics.hpp"

namespace masstool {

CandidateSlate sample_slate(const QueryRecord& query, const EngineContext& ctx, int slate_size,
                            Rng& rng) {
  const auto m = static_cast<std::size_t>(slate_size);
  if (query.golden_tools.empty())
    raise(Errc::empty_golden_set, "sample_slate: query has no golden tools");
  if (m <= query.golden_tools.size())
    raise(Errc::slate_too_small, "sample_slate: M must exceed the golden set size");

  CandidateSlate slate;
  slate.query_id = query.query_id;
  std::set<std::size_t> golden_rows;
  for (const auto& tid : query.golden_tools) {
    std::size_t row = ctx.tool_row.at(tid);
    golden_rows.insert(row);
    slate.tool_rows.push_back(row);
    slate.golden.push_back(1);
  }

  std::vector<std::size_t> negatives;
  negatives.reserve(ctx.tool_ids().size());
  for (std::size_t i = 0; i < ctx.tool_ids().size(); ++i)
    if (!golden_rows.contains(i)) negatives.push_back(i);
  std::size_t need = m - query.golden_tools.size();
  if (negatives.size() < need)
    raise(Errc::insufficient_negatives, "sample_slate: not enough non-golden tools");

  // partial Fisher-Yates draw of `need` distinct negatives
  for (std::size_t i = 0; i < need; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(negatives.size() - i));
    std::swap(negatives[i], negatives[j]);
    slate.tool_rows.push_back(negatives[i]);
    slate.golden.push_back(0);
  }
  slate.validate();
  return slate;
}

namespace {

struct NamedAdam {
  std::vector<std::pair<std::string, TensorPtr>> params;
  std::vector<AdamState> states;

  NamedAdam(const Model& model, double lr) {
    params = model.named_params();
    for (auto& [name, p] : params) states.emplace_back(p->size(), lr);
  }

  void zero_grads() {
    for (auto& [name, p] : params) p->zero_grad();
  }

  void step() {
    for (std::size_t i = 0; i < params.size(); ++i) adam_step(*params[i].second, states[i]);
  }
};

double train_recall5(const Model& model, EngineContext& ctx, const Corpus& corpus,
                     const std::vector<std::size_t>& queries) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t qi : queries) {
    const QueryRecord& q = corpus.queries[qi];
    if (q.usage_label != 1) continue;
    Vec emb = ctx.qemb->row_vec(ctx.qemb->row_of(q.query_id));
    RetrievalResult r = retrieve_topk(model, ctx, emb, 5, 0.0);
    std::vector<std::string> ranked;
    for (const auto& rt : r.ranked) ranked.push_back(rt.tool_id);
    std::set<std::string> golden(q.golden_tools.begin(), q.golden_tools.end());
    acc += recall_at_k(ranked, golden, 5);
    n += 1;
  }
  return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

}  // namespace

TrainResult train(const Corpus& full_train, const EmbeddingMatrix& qemb,
                  const EmbeddingMatrix& temb, const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  // Optional validation carve-out for patience-based stopping.
  std::vector<std::size_t> val_queries;
  Corpus train_corpus = full_train;
  if (cfg.patience > 0) {
    Rng vr = rng.split("val-carve");
    std::vector<std::size_t> ret = full_train.ret_indices;
    vr.shuffle(ret);
    std::size_t n_val = std::max<std::size_t>(1, ret.size() / 10);
    std::vector<std::size_t> keep(full_train.det_indices);
    for (std::size_t i = n_val; i < ret.size(); ++i) keep.push_back(ret[i]);
    std::sort(keep.begin(), keep.end());
    val_queries.assign(ret.begin(), ret.begin() + n_val);
    train_corpus = subset_corpus(full_train, keep);
  }

  Model model = Model::init(cfg, qemb.dim, rng);
  EngineContext ctx = build_context(model, train_corpus, qemb, temb);
  NamedAdam opt(model, cfg.lr);
  Rng slate_rng = rng.split("slates");
  Rng shuffle_rng = rng.split("shuffle");

  // Pool-row order for retrieval batches; all-query order for detection.
  std::vector<std::size_t> ret_rows(ctx.pool.size());
  for (std::size_t i = 0; i < ret_rows.size(); ++i) ret_rows[i] = i;
  std::vector<std::size_t> det_all(train_corpus.queries.size());
  for (std::size_t i = 0; i < det_all.size(); ++i) det_all[i] = i;

  TrainResult out;
  std::vector<EpochStats>& history = out.history;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::size_t det_cursor = det_all.size();  // forces an initial shuffle

  double best_val = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(ret_rows);
    EpochStats stats;
    stats.epoch = epoch;
    std::size_t steps = 0;

    for (std::size_t start = 0; start < ret_rows.size(); start += batch) {
      std::size_t end = std::min(start + batch, ret_rows.size());
      if (cfg.trainable_embeddings) refresh_context(ctx, model);
      opt.zero_grads();

      // --- retrieval + contrastive terms over the retrieval batch
      TensorPtr l_ret;
      std::vector<TensorPtr> con_q_qs, con_q_qt, con_s_qs, con_s_qt;
      for (std::size_t bi = start; bi < end; ++bi) {
        std::size_t row = ret_rows[bi];
        const std::string& qid = ctx.pool.ids[row];
        const QueryRecord& q = train_corpus.query(qid);
        Vec emb = qemb.row_vec(qemb.row_of(qid));
        QueryForward fwd =
            forward_query(model, ctx, emb, &qid, &ctx.train_neighbors[row]);
        CandidateSlate slate = sample_slate(q, ctx, cfg.slate_size, slate_rng);
        std::vector<TensorPtr> scores;
        scores.reserve(slate.size());
        for (std::size_t t : slate.tool_rows) scores.push_back(score_tool(fwd, ctx, t));
        TensorPtr l = listwise_loss(ops::stack(scores), slate);
        l_ret = l_ret ? ops::add(l_ret, l) : l;

        if (!cfg.ablation.no_contrastive && cfg.beta > 0.0) {
          std::size_t scene = ctx.graphs.scenes.query_scene.at(qid);
          con_q_qs.push_back(ctx.q_qs_nodes[row]);
          con_q_qt.push_back(ctx.q_qt_nodes[row]);
          con_s_qs.push_back(ctx.s_qs_nodes[scene]);
          std::vector<TensorPtr> rows;
          std::vector<double> coeffs;
          const auto& tools = ctx.graphs.scenes.scene_tools[scene];
          for (const auto& tid : tools) {
            rows.push_back(ctx.t_graph_nodes[ctx.tool_row.at(tid)]);
            coeffs.push_back(1.0 / static_cast<double>(tools.size()));
          }
          con_s_qt.push_back(ops::lincomb(rows, coeffs));
        }
      }
      l_ret = ops::affine(l_ret, 1.0 / static_cast<double>(end - start), 0.0);

      TensorPtr l_con = constant(0.0);
      if (con_q_qs.size() >= 2)
        l_con = contrastive_loss(con_q_qs, con_q_qt, con_s_qs, con_s_qt, cfg.tau);

      // --- detection term over a batch drawn from the full training set
      TensorPtr l_det = constant(0.0);
      if (cfg.lambda > 0.0) {
        std::vector<TensorPtr> yhats;
        std::vector<int> labels;
        for (std::size_t i = 0; i < batch && i < det_all.size(); ++i) {
          if (det_cursor >= det_all.size()) {
            shuffle_rng.shuffle(det_all);
            det_cursor = 0;
          }
          const QueryRecord& q = train_corpus.queries[det_all[det_cursor++]];
          Vec emb = qemb.row_vec(qemb.row_of(q.query_id));
          yhats.push_back(detect(constant(emb), model.detection).yhat);
          labels.push_back(q.usage_label);
        }
        l_det = detection_loss_batch(yhats, labels);
      }

      TensorPtr total = total_loss(l_ret, l_det, l_con,
                                   LossWeights{cfg.lambda, cfg.beta, cfg.tau});
      if (!std::isfinite(total->value())) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << " step " << steps << ": ret="
           << l_ret->value() << " det=" << l_det->value() << " con=" << l_con->value();
        raise(Errc::non_finite_loss, os.str());
      }
      backward(total);
      opt.step();

      stats.loss_ret += l_ret->value();
      stats.loss_det += l_det->value();
      stats.loss_con += l_con->value();
      stats.loss_total += total->value();
      steps += 1;
    }

    if (steps > 0) {
      stats.loss_ret /= static_cast<double>(steps);
      stats.loss_det /= static_cast<double>(steps);
      stats.loss_con /= static_cast<double>(steps);
      stats.loss_total /= static_cast<double>(steps);
    }

    if (cfg.patience > 0) {
      if (cfg.trainable_embeddings) refresh_context(ctx, model);
      stats.val_recall5 = train_recall5(model, ctx, full_train, val_queries);
      if (stats.val_recall5 > best_val) {
        best_val = stats.val_recall5;
        since_best = 0;
      } else {
        since_best += 1;
      }
    }
    history.push_back(stats);
    if (cfg.patience > 0 && since_best > cfg.patience) break;
  }

  // Round parameters through 32-bit storage so a saved checkpoint reproduces
  // this model's rankings exactly.
  model.quantize_to_f32();
  refresh_context(ctx, model);

  out.model = std::move(model);
  out.context = std::move(ctx);
  return out;
}

}  // namespace masstool
