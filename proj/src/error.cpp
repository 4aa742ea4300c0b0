#include "scflow/error.hpp"

namespace scflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kLengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::kNonpositiveFactor: return "NONPOSITIVE_FACTOR";
    case ErrorCode::kNonpositiveFMass: return "NONPOSITIVE_F_MASS";
    case ErrorCode::kNonpositiveMean: return "NONPOSITIVE_MEAN";
    case ErrorCode::kRootNotBracketed: return "ROOT_NOT_BRACKETED";
    case ErrorCode::kStepRejected: return "STEP_REJECTED";
    case ErrorCode::kUndefinedQ: return "UNDEFINED_Q";
    case ErrorCode::kIndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::kParse: return "PARSE_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace scflow
