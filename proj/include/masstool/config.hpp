#pragma once

#include <cstdint>
#include <string>

#include "masstool/towers.hpp"

namespace masstool {

struct AblationFlags {
  bool no_adakt = false;
  bool no_suim = false;
  bool no_dynamic_filter = false;
  bool no_contrastive = false;
};

/// Full training configuration. Serialized as flat "key = value" lines;
/// unknown keys are rejected.
struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 2048;
  int epochs = 50;
  double lambda = 0.2;  // detection loss weight
  double beta = 0.04;   // contrastive loss weight
  double tau = 0.1;     // InfoNCE temperature
  int slate_size = 32;  // M
  int knn_k = 20;       // K
  double epsilon = 0.8;
  int gcn_layers = 2;  // L
  TransferKind transfer_fn = TransferKind::gating;
  double decision_threshold = 0.5;
  int hidden_dim = 0;  // 0 = encoder dim
  bool trainable_embeddings = false;
  AblationFlags ablation;
  int patience = 0;  // 0 = early stopping off
  std::uint64_t seed = 42;

  void validate() const;
  std::string to_text() const;
  static TrainConfig parse(const std::string& text);
  static TrainConfig from_file(const std::string& path);
};

/// FNV-1a hash of the canonical config text, hex-encoded.
std::string config_hash(const TrainConfig& cfg);

}  // namespace masstool
