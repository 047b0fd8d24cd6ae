#include "safe_explore/error.hpp"

namespace safe_explore {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid parameter";
    case ErrorCode::invalid_kernel: return "invalid kernel";
    case ErrorCode::ill_conditioned: return "ill-conditioned model";
    case ErrorCode::domain_too_large: return "domain too large";
    case ErrorCode::invalid_action: return "invalid action";
    case ErrorCode::format: return "format error";
    case ErrorCode::degenerate_normalization: return "degenerate normalization";
    case ErrorCode::config: return "config error";
    case ErrorCode::io: return "io error";
    case ErrorCode::aggregation: return "aggregation error";
  }
  return "unknown error";
}

}  // namespace safe_explore
