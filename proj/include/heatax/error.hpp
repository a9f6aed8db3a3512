#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heatax {

enum class ErrorCode {
  shape_mismatch,
  invalid_argument,
  invalid_state,
  numeric,
  io,
  format,
};

std::string_view to_string(ErrorCode code);

/// All library failures are reported through this type. `code()` is what the
/// CLI prints as the machine-readable part of its one-line error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace heatax
