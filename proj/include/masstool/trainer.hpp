#pragma once

#include <string>
#include <vector>

#include "masstool/losses.hpp"
#include "masstool/model.hpp"

namespace masstool {

/// All golden tools of the query plus uniform-without-replacement negatives
/// from the global tool set; deterministic under the rng state.
CandidateSlate sample_slate(const QueryRecord& query, const EngineContext& ctx, int slate_size,
                            Rng& rng);

struct EpochStats {
  int epoch = 0;
  double loss_ret = 0.0;
  double loss_det = 0.0;
  double loss_con = 0.0;
  double loss_total = 0.0;
  double val_recall5 = -1.0;  // only set when early stopping is on
};

struct TrainResult {
  Model model;
  EngineContext context;
  std::vector<EpochStats> history;
};

/// Multi-task training over the given (already split) training corpus.
/// Each step draws a retrieval batch from D_ret and a detection batch from
/// the full training set, computes L_ret + beta L_con + lambda L_det, and
/// applies one Adam step to every learnable tensor.
TrainResult train(const Corpus& train_corpus, const EmbeddingMatrix& qemb,
                  const EmbeddingMatrix& temb, const TrainConfig& cfg);

/// Checkpoint file: magic "MTCK", u32 version, u64 step, u32 tensor count,
/// then (u32 name length, name, EMB1-style tensor block) per parameter, then
/// a length-prefixed config snapshot in the config file's key=value format.
void save_checkpoint(const Model& model, std::uint64_t step, const std::string& path);

struct LoadedCheckpoint {
  Model model;
  std::uint64_t step = 0;
};

/// Rebuilds the model from a checkpoint. When `expected` is given, the file's
/// config must agree on the model-shape fields (transfer_fn, ablations,
/// hidden_dim, trainable_embeddings).
LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const TrainConfig* expected = nullptr);

}  // namespace masstool
