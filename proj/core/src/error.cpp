#include "sketchsgd/error.hpp"

namespace sketchsgd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIndexOutOfRange: return "index-out-of-range";
    case ErrorCode::kConfigMismatch: return "config-mismatch";
    case ErrorCode::kNonFiniteScalar: return "non-finite-scalar";
    case ErrorCode::kKOutOfRange: return "k-out-of-range";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kEmptyAverage: return "empty-average";
    case ErrorCode::kLookupFailure: return "lookup-failure";
    case ErrorCode::kConfigInconsistency: return "configuration-inconsistency";
    case ErrorCode::kNumericDivergence: return "numeric-divergence";
    case ErrorCode::kIoError: return "io-error";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kDimensionInconsistency: return "dimension-inconsistency";
    case ErrorCode::kCorruptMessage: return "corrupt-message";
  }
  return "unknown";
}

}  // namespace sketchsgd
