#include "f2f/error.hpp"

namespace f2f {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "unsupported version";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kShapeInconsistent: return "inconsistent shapes";
    case ErrorCode::kMalformedHeader: return "malformed header";
    case ErrorCode::kMissingFrame: return "missing frame";
    case ErrorCode::kEmptySequence: return "empty sequence";
    case ErrorCode::kInconsistentDims: return "inconsistent frame dimensions";
    case ErrorCode::kUnknownNoiseKind: return "unknown noise kind";
    case ErrorCode::kEmptyCorpus: return "empty corpus";
  }
  return "unknown error";
}

ExitStatus exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFinite: return ExitStatus::kNumerical;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownNoiseKind: return ExitStatus::kUsage;
    default: return ExitStatus::kData;
  }
}

}  // namespace f2f
