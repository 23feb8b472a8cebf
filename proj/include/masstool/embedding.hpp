#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "masstool/vecmath.hpp"

namespace masstool {

/// Id-indexed matrix of frozen encoder outputs. Rows are stored in 32-bit as
/// on disk; math paths convert to 64-bit on access.
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<float> rows;  // |ids| * dim
  std::unordered_map<std::string, std::size_t> index;

  std::size_t count() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const { return {rows.data() + i * dim, dim}; }
  Vec row_vec(std::size_t i) const;
  /// Throws IdMismatch when the id is absent (missing embeddings are a hard error).
  std::size_t row_of(const std::string& id) const;
  bool has(const std::string& id) const { return index.contains(id); }

  static EmbeddingMatrix from_rows(std::vector<std::string> ids, std::size_t dim,
                                   std::vector<float> rows);
};

/// EMB1 binary format: magic "EMB1", little-endian u32 count, u32 dim, then
/// count*dim little-endian IEEE-754 32-bit reals row-major. Ids live in a
/// companion "<path>.ids" file, one per line.
EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingMatrix& m, const std::string& path);

/// Deterministic whitespace-token hash bag, L2-normalized. Test-time stand-in
/// for a frozen encoder; identical texts map to identical vectors.
Vec hash_embed(const std::string& text, std::size_t dim, std::uint64_t seed);

/// Retains candidate ids whose maximum cosine similarity against the
/// reference (tool-dependent) queries lies within [lo, hi], bounds inclusive.
std::vector<std::string> tooldet_filter(const EmbeddingMatrix& candidates,
                                        const EmbeddingMatrix& tool_dependent,
                                        double lo = 0.4, double hi = 0.6);

}  // namespace masstool
