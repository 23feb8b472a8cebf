#include "masstool/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "masstool/errors.hpp"

namespace masstool {

double recall_at_k(const std::vector<std::string>& ranked_ids,
                   const std::set<std::string>& golden, int k) {
  if (golden.empty()) raise(Errc::empty_golden, "recall_at_k: empty golden set");
  if (k < 1) raise(Errc::config_error, "recall_at_k: k must be >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked_ids.size() && i < static_cast<std::size_t>(k); ++i)
    if (golden.contains(ranked_ids[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(golden.size());
}

double ndcg_at_k(const std::vector<std::string>& ranked_ids,
                 const std::set<std::string>& golden, int k) {
  if (golden.empty()) raise(Errc::empty_golden, "ndcg_at_k: empty golden set");
  if (k < 1) raise(Errc::config_error, "ndcg_at_k: k must be >= 1");
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked_ids.size() && i < static_cast<std::size_t>(k); ++i)
    if (golden.contains(ranked_ids[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  double idcg = 0.0;
  std::size_t ideal = std::min<std::size_t>(k, golden.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

const MetricRecord* MetricReport::find(const std::string& metric, int k,
                                       std::optional<int> stratum) const {
  for (const auto& r : records)
    if (r.metric == metric && r.k == k && r.stratum == stratum) return &r;
  return nullptr;
}

MetricReport evaluate(const Model& model, const EngineContext& ctx, const Corpus& eval_corpus,
                      const std::vector<std::size_t>& eval_queries, const std::vector<int>& ks,
                      bool gated) {
  MetricReport report;
  report.config_hash = config_hash(model.cfg);
  report.query_count = eval_queries.size();

  struct Accum {
    double sum = 0.0;
    std::size_t n = 0;
  };
  // (metric, k, stratum) -> accumulator; stratum -1 = aggregate
  std::map<std::tuple<std::string, int, int>, Accum> acc;
  auto add = [&](const std::string& m, int k, int stratum, double v) {
    auto& a = acc[{m, k, stratum}];
    a.sum += v;
    a.n += 1;
  };

  std::vector<double> pos_scores, neg_scores;
  std::size_t correct = 0, det_n = 0;
  int max_k = 1;
  for (int k : ks) max_k = std::max(max_k, k);

  for (std::size_t qi : eval_queries) {
    const QueryRecord& q = eval_corpus.queries[qi];
    Vec emb = ctx.qemb->row_vec(ctx.qemb->row_of(q.query_id));

    QueryForward fwd = forward_query(model, ctx, emb, &q.query_id, nullptr);
    double yhat = fwd.yhat->value();
    (q.usage_label == 1 ? pos_scores : neg_scores).push_back(yhat);
    int predicted = yhat >= model.cfg.decision_threshold ? 1 : 0;
    correct += predicted == q.usage_label ? 1 : 0;
    det_n += 1;

    if (q.usage_label != 1) continue;

    std::vector<std::string> ranked;
    if (!gated || yhat >= model.cfg.decision_threshold) {
      const Vec& eq = fwd.e_q->data;
      std::vector<RankedTool> scored;
      scored.reserve(ctx.tool_ids().size());
      for (std::size_t t = 0; t < ctx.tool_ids().size(); ++t)
        scored.push_back({ctx.tool_ids()[t], dot(eq, ctx.tool_norm.row_span(t))});
      std::size_t keep = std::min<std::size_t>(max_k, scored.size());
      std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                        [](const RankedTool& a, const RankedTool& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.tool_id < b.tool_id;
                        });
      for (std::size_t i = 0; i < keep; ++i) ranked.push_back(scored[i].tool_id);
    }

    std::set<std::string> golden(q.golden_tools.begin(), q.golden_tools.end());
    int stratum = static_cast<int>(golden.size());
    for (int k : ks) {
      double r = recall_at_k(ranked, golden, k);
      double n = ndcg_at_k(ranked, golden, k);
      add("recall", k, -1, r);
      add("recall", k, stratum, r);
      add("ndcg", k, -1, n);
      add("ndcg", k, stratum, n);
    }
  }

  for (const auto& [key, a] : acc) {
    const auto& [metric, k, stratum] = key;
    MetricRecord rec;
    rec.metric = metric;
    rec.k = k;
    if (stratum >= 0) rec.stratum = stratum;
    rec.value = a.sum / static_cast<double>(a.n);
    rec.n = a.n;
    report.records.push_back(rec);
  }

  if (det_n > 0) {
    MetricRecord accr;
    accr.metric = "detection_accuracy";
    accr.value = static_cast<double>(correct) / static_cast<double>(det_n);
    accr.n = det_n;
    report.records.push_back(accr);
  }
  if (!pos_scores.empty() && !neg_scores.empty()) {
    // Mann-Whitney AUC with 0.5 credit for ties
    double u = 0.0;
    for (double p : pos_scores)
      for (double n : neg_scores) u += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    MetricRecord auc;
    auc.metric = "detection_auc";
    auc.value = u / (static_cast<double>(pos_scores.size()) *
                     static_cast<double>(neg_scores.size()));
    auc.n = det_n;
    report.records.push_back(auc);
  }
  return report;
}

void write_report_jsonl(const MetricReport& report, std::ostream& os) {
  for (const auto& r : report.records) {
    nlohmann::json j;
    j["metric"] = r.metric;
    j["k"] = r.k;
    j["stratum"] = r.stratum ? nlohmann::json(*r.stratum) : nlohmann::json(nullptr);
    j["value"] = r.value;
    j["n"] = r.n;
    os << j.dump() << "\n";
  }
}

std::string format_report_table(const MetricReport& report) {
  std::ostringstream os;
  os << "metric        k  stratum      value       n\n";
  os << "------------- -- -------- ---------- -------\n";
  for (const auto& r : report.records) {
    os << std::left << std::setw(13) << r.metric << " " << std::right << std::setw(2) << r.k
       << " " << std::setw(8) << (r.stratum ? std::to_string(*r.stratum) : "all") << " "
       << std::setw(10) << std::fixed << std::setprecision(6) << r.value << " " << std::setw(7)
       << r.n << "\n";
  }
  os << "queries: " << report.query_count << "  config: " << report.config_hash << "\n";
  return os.str();
}

}  // namespace masstool
