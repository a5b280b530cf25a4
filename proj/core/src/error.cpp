#include "hybrid_spkr/error.hpp"

namespace hybrid_spkr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kRateMismatch: return "sample rate mismatch";
    case ErrorCode::kTooShort: return "signal too short";
    case ErrorCode::kInsufficientData: return "insufficient training data";
    case ErrorCode::kUnstableSpec: return "unstable AR specification";
    case ErrorCode::kUnknownLabel: return "unknown speaker label";
    case ErrorCode::kUndefinedCorrelation: return "undefined correlation";
    case ErrorCode::kInvalidManifest: return "invalid manifest";
    case ErrorCode::kMissingFile: return "missing file";
    case ErrorCode::kMalformedWav: return "malformed WAV";
    case ErrorCode::kUnsupportedRate: return "unsupported sample rate";
    case ErrorCode::kMalformedModel: return "malformed model file";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown error";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile:
    case ErrorCode::kMalformedWav:
    case ErrorCode::kUnsupportedRate:
    case ErrorCode::kMalformedModel:
    case ErrorCode::kIo:
      return ErrorCategory::kIo;
    case ErrorCode::kUndefinedCorrelation:
      return ErrorCategory::kNumeric;
    case ErrorCode::kInternal:
      return ErrorCategory::kInternal;
    default:
      return ErrorCategory::kValidation;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace hybrid_spkr
