#pragma once

#include <stdexcept>
#include <string>

namespace egofuture {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyInput,
  kDimensionMismatch,
  kPlaneNotFound,
  kDegenerateGaze,
  kHorizon,
  kIndexOutOfRange,
  kEmptyBin,
  kGeneration,
  kUnreachable,
  kIo,
  kFormat,
};

const char* to_string(ErrorCode code);

/// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace egofuture
