#pragma once

#include <stdexcept>
#include <string>

namespace f2f {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kIo,
  kBadMagic,
  kBadVersion,
  kTruncated,
  kShapeInconsistent,
  kMalformedHeader,
  kMissingFrame,
  kEmptySequence,
  kInconsistentDims,
  kUnknownNoiseKind,
  kEmptyCorpus,
};

// Process exit status a CLI front end should report for an error.
enum class ExitStatus : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* to_string(ErrorCode code);
ExitStatus exit_status_for(ErrorCode code);

}  // namespace f2f
