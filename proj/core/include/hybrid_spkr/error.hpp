#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hybrid_spkr {

// Broad failure classes; the CLI maps each to a process exit code.
enum class ErrorCategory { kValidation, kIo, kNumeric, kInternal };

enum class ErrorCode {
  kInvalidArgument,
  kEmptyInput,
  kDimensionMismatch,
  kRateMismatch,
  kTooShort,
  kInsufficientData,
  kUnstableSpec,
  kUnknownLabel,
  kUndefinedCorrelation,
  kInvalidManifest,
  kMissingFile,
  kMalformedWav,
  kUnsupportedRate,
  kMalformedModel,
  kIo,
  kInternal,
};

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, std::string_view message) {
  if (!condition) fail(code, std::string(message));
}

}  // namespace hybrid_spkr
