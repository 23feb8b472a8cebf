#pragma once

#include <cstdint>

#include "masstool/corpus.hpp"
#include "masstool/embedding.hpp"

namespace masstool {

/// Deterministic synthetic fixture: clustered retrieval queries whose hash
/// embeddings align within each intent cluster, one golden tool set per
/// cluster, and tool-independent detection negatives with disjoint
/// vocabulary.
struct SynthConfig {
  int clusters = 5;
  int queries_per_cluster = 10;
  int tools_per_cluster = 4;
  int negatives = 50;
  std::size_t dim = 48;
  std::uint64_t seed = 7;
};

struct SynthData {
  Corpus corpus;
  EmbeddingMatrix query_emb;
  EmbeddingMatrix tool_emb;
};

SynthData make_synthetic(const SynthConfig& cfg);

}  // namespace masstool
