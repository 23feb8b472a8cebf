#pragma once

#include <stdexcept>
#include <string>

namespace masstool {

enum class Errc {
  zero_norm,
  missing_grad,
  non_finite,
  dim_mismatch,
  parse_error,
  dangling_tool,
  label_mismatch,
  too_small,
  id_mismatch,
  empty_golden_set,
  empty_scene,
  empty_pool,
  unknown_variant,
  empty_tool_set,
  batch_too_small,
  slate_too_small,
  insufficient_negatives,
  empty_golden,
  non_finite_loss,
  io_error,
  version_mismatch,
  corrupt_file,
  config_error,
};

const char* errc_name(Errc c);

/// Single exception type carrying a machine-checkable error code.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace masstool
