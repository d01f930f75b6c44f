#pragma once

#include <stdexcept>
#include <string>

namespace chaosavg {

// Mirrors chaosavg_status in chaosavg.h; keep the numeric values in sync.
enum class ErrorCode : int {
  invalid_argument = 1,
  invalid_config = 2,
  invalid_input = 3,
  numerical_failure = 4,
  insufficient_data = 5,
  sampler_failure = 6,
  io_error = 7,
  empty_ensemble = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

const char* error_code_name(ErrorCode code) noexcept;

}  // namespace chaosavg
