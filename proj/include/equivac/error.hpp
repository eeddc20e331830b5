#pragma once

#include <stdexcept>
#include <string>

namespace equivac {

enum class ErrorCode {
  InvalidArgument,
  ClosureOverflow,
  NotInClosure,
  HypothesisScanFailed,
  NonConvexQ,
  GridTooLarge,
  StabilityViolation,
  NoConvergence,
  Overflow,
  DegenerateAnnulus,
  NoAdmissibleDelta,
  BallOutsideD,
  SeedBallRejected,
  InsufficientNodes,
  ParseError,
  ValidationError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures are reported through this type; the code identifies
// the failure class, the message carries the specifics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace equivac
