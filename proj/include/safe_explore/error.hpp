#pragma once

#include <stdexcept>
#include <string>

namespace safe_explore {

enum class ErrorCode {
  invalid_parameter,
  invalid_kernel,
  ill_conditioned,
  domain_too_large,
  invalid_action,
  format,
  degenerate_normalization,
  config,
  io,
  aggregation,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; the C API maps `code()`
// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace safe_explore
