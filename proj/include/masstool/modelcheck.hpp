#pragma once

#include "masstool/config.hpp"

namespace masstool {

/// Full-model finite-difference suite on a fixed 5-query/4-tool/2-scene
/// instance (plus three detection negatives): builds the total loss with all
/// requested modules active and returns the max relative gradient error over
/// every learnable tensor.
double model_grad_check(TransferKind kind, const AblationFlags& ablation = {},
                        bool trainable_embeddings = false);

}  // namespace masstool
