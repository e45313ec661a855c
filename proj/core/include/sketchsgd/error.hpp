#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sketchsgd {

enum class ErrorCode {
  kInvalidConfig,
  kIndexOutOfRange,
  kConfigMismatch,
  kNonFiniteScalar,
  kKOutOfRange,
  kDimensionMismatch,
  kEmptyAverage,
  kLookupFailure,
  kConfigInconsistency,
  kNumericDivergence,
  kIoError,
  kParseError,
  kDimensionInconsistency,
  kCorruptMessage,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported as sketchsgd::Error; code() identifies the
// failure class so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sketchsgd
