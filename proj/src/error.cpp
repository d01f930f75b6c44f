#include "chaosavg/error.hpp"

namespace chaosavg {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::numerical_failure: return "numerical-failure";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::sampler_failure: return "sampler-failure";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::empty_ensemble: return "empty-ensemble";
  }
  return "unknown";
}

}  // namespace chaosavg
