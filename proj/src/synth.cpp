#include "masstool/synth.hpp"

#include <string>

#include "masstool/errors.hpp"
#include "masstool/rng.hpp"

namespace masstool {

namespace {

// Clusters come in confusable pairs sharing domain tokens: queries and tools
// of paired clusters look semantically close while requiring disjoint golden
// sets. The cluster's own topic token carries the separating margin, so the
// search side has to exploit it.
std::string domain_token(int cluster) { return "dom" + std::to_string(cluster / 2); }

std::string query_text(int cluster, int j) {
  std::string text = domain_token(cluster) + " top" + std::to_string(cluster);
  text += " sty" + std::to_string(cluster) + "v" + std::to_string(j % 3);
  text += " nz" + std::to_string(cluster) + "x" + std::to_string(j);
  return text;
}

std::string tool_text(int cluster, int index) {
  // domain-heavy descriptions keep paired clusters' tools nearby
  return domain_token(cluster) + " " + domain_token(cluster) + "b top" +
         std::to_string(cluster) + " fac" + std::to_string(index);
}

std::string negative_text(int i) {
  return "banter" + std::to_string(i % 8) + " smalltalk" + std::to_string(i % 5) + " filler" +
         std::to_string(i);
}

// Uneven cluster sizes: small clusters cannot fill a top-K neighborhood on
// their own, so unfiltered search necessarily crosses cluster boundaries.
std::vector<int> cluster_sizes(int clusters, int total) {
  std::vector<int> sizes(clusters, 0);
  for (int c = 0; c < clusters; ++c) sizes[c] = total / clusters;
  int extra = total - (total / clusters) * clusters;
  for (int c = 0; c < extra; ++c) sizes[c] += 1;
  // skew: move queries from the tail clusters to the head ones
  int shift = total / (clusters * 2);
  for (int c = 0; c < clusters / 2 && clusters >= 2; ++c) {
    int donor = clusters - 1 - c;
    int take = std::min(shift, sizes[donor] - 2);
    if (take > 0) {
      sizes[c] += take;
      sizes[donor] -= take;
    }
  }
  return sizes;
}

}  // namespace

SynthData make_synthetic(const SynthConfig& cfg) {
  if (cfg.clusters < 1 || cfg.queries_per_cluster < 1 || cfg.tools_per_cluster < 2)
    raise(Errc::config_error, "make_synthetic: degenerate configuration");

  std::vector<ToolRecord> tools;
  std::vector<QueryRecord> queries;

  for (int c = 0; c < cfg.clusters; ++c) {
    for (int t = 0; t < cfg.tools_per_cluster; ++t) {
      int index = c * cfg.tools_per_cluster + t;
      char id[8];
      std::snprintf(id, sizeof id, "t%02d", index);
      tools.push_back({id, tool_text(c, index)});
    }
  }

  std::vector<int> sizes =
      cluster_sizes(cfg.clusters, cfg.clusters * cfg.queries_per_cluster);
  int qindex = 0;
  for (int c = 0; c < cfg.clusters; ++c) {
    // golden set sizes cycle 1..3 over the clusters, covering strata 1-3
    int golden_size = 1 + c % 3;
    std::vector<std::string> golden;
    for (int g = 0; g < golden_size && g < cfg.tools_per_cluster; ++g) {
      char id[8];
      std::snprintf(id, sizeof id, "t%02d", c * cfg.tools_per_cluster + g);
      golden.push_back(id);
    }
    for (int j = 0; j < sizes[c]; ++j) {
      char id[8];
      std::snprintf(id, sizeof id, "q%03d", qindex++);
      queries.push_back({id, query_text(c, j), 1, golden});
    }
  }

  for (int i = 0; i < cfg.negatives; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "n%03d", i);
    queries.push_back({id, negative_text(i), 0, {}});
  }

  SynthData out;
  out.corpus = make_corpus(std::move(tools), std::move(queries));

  std::vector<std::string> qids;
  std::vector<float> qrows;
  for (const auto& q : out.corpus.queries) {
    qids.push_back(q.query_id);
    Vec v = hash_embed(q.text, cfg.dim, cfg.seed);
    for (double x : v) qrows.push_back(static_cast<float>(x));
  }
  out.query_emb = EmbeddingMatrix::from_rows(std::move(qids), cfg.dim, std::move(qrows));

  std::vector<std::string> tids;
  std::vector<float> trows;
  for (const auto& t : out.corpus.tools) {
    tids.push_back(t.tool_id);
    Vec v = hash_embed(t.description, cfg.dim, cfg.seed);
    for (double x : v) trows.push_back(static_cast<float>(x));
  }
  out.tool_emb = EmbeddingMatrix::from_rows(std::move(tids), cfg.dim, std::move(trows));
  return out;
}

}  // namespace masstool
