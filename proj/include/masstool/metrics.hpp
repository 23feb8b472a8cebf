#pragma once

#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "masstool/model.hpp"

namespace masstool {

/// |top-K intersect golden| / |golden|. Throws EmptyGolden.
double recall_at_k(const std::vector<std::string>& ranked_ids,
                   const std::set<std::string>& golden, int k);

/// Binary-relevance NDCG: DCG over the top K against the ideal DCG over
/// min(K, |golden|) positions. Throws EmptyGolden.
double ndcg_at_k(const std::vector<std::string>& ranked_ids,
                 const std::set<std::string>& golden, int k);

struct MetricRecord {
  std::string metric;
  int k = 0;                   // 0 for detection metrics
  std::optional<int> stratum;  // |T_q| stratum, or empty for aggregates
  double value = 0.0;
  std::size_t n = 0;
};

struct MetricReport {
  std::vector<MetricRecord> records;
  std::size_t query_count = 0;
  std::string config_hash;

  const MetricRecord* find(const std::string& metric, int k,
                           std::optional<int> stratum = std::nullopt) const;
};

/// Scores every evaluation query against the full tool set. Retrieval
/// metrics run over the retrieval (y=1) queries with the detection gate
/// bypassed unless `gated`; detection accuracy/AUC cover all given queries.
MetricReport evaluate(const Model& model, const EngineContext& ctx, const Corpus& eval_corpus,
                      const std::vector<std::size_t>& eval_queries, const std::vector<int>& ks,
                      bool gated = false);

/// One JSON object per record: {"metric","k","stratum","value","n"}.
void write_report_jsonl(const MetricReport& report, std::ostream& os);
std::string format_report_table(const MetricReport& report);

}  // namespace masstool
