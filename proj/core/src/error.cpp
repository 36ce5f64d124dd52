#include "egofuture/error.hpp"

namespace egofuture {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kPlaneNotFound: return "plane not found";
    case ErrorCode::kDegenerateGaze: return "degenerate gaze";
    case ErrorCode::kHorizon: return "insufficient horizon";
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kEmptyBin: return "empty pitch bin";
    case ErrorCode::kGeneration: return "generation failed";
    case ErrorCode::kUnreachable: return "unreachable goal";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kFormat: return "format error";
  }
  return "unknown error";
}

}  // namespace egofuture
