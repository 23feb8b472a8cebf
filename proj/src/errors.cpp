#include "masstool/errors.hpp"

namespace masstool {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::zero_norm: return "ZeroNorm";
    case Errc::missing_grad: return "MissingGrad";
    case Errc::non_finite: return "NonFinite";
    case Errc::dim_mismatch: return "DimMismatch";
    case Errc::parse_error: return "ParseError";
    case Errc::dangling_tool: return "DanglingTool";
    case Errc::label_mismatch: return "LabelMismatch";
    case Errc::too_small: return "TooSmall";
    case Errc::id_mismatch: return "IdMismatch";
    case Errc::empty_golden_set: return "EmptyGoldenSet";
    case Errc::empty_scene: return "EmptyScene";
    case Errc::empty_pool: return "EmptyPool";
    case Errc::unknown_variant: return "UnknownVariant";
    case Errc::empty_tool_set: return "EmptyToolSet";
    case Errc::batch_too_small: return "BatchTooSmall";
    case Errc::slate_too_small: return "SlateTooSmall";
    case Errc::insufficient_negatives: return "InsufficientNegatives";
    case Errc::empty_golden: return "EmptyGolden";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::io_error: return "IoError";
    case Errc::version_mismatch: return "VersionMismatch";
    case Errc::corrupt_file: return "CorruptFile";
    case Errc::config_error: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace masstool
