#include "ddstab/errors.hpp"

namespace ddstab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return "invalid_input";
    case ErrorCode::kInvalidOrder:
      return "invalid_order";
    case ErrorCode::kDivergence:
      return "divergence";
    case ErrorCode::kExcitationFailure:
      return "excitation_failure";
    case ErrorCode::kInvalidScale:
      return "invalid_scale";
    case ErrorCode::kNoFiniteGamma:
      return "no_finite_gamma";
    case ErrorCode::kOracleRequired:
      return "oracle_required";
    case ErrorCode::kExtraction:
      return "extraction";
    case ErrorCode::kInsufficientData:
      return "insufficient_data";
    case ErrorCode::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace ddstab
