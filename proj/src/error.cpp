#include "equivac/error.hpp"

namespace equivac {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ClosureOverflow: return "ClosureOverflow";
    case ErrorCode::NotInClosure: return "NotInClosure";
    case ErrorCode::HypothesisScanFailed: return "HypothesisScanFailed";
    case ErrorCode::NonConvexQ: return "NonConvexQ";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::DegenerateAnnulus: return "DegenerateAnnulus";
    case ErrorCode::NoAdmissibleDelta: return "NoAdmissibleDelta";
    case ErrorCode::BallOutsideD: return "BallOutsideD";
    case ErrorCode::SeedBallRejected: return "SeedBallRejected";
    case ErrorCode::InsufficientNodes: return "InsufficientNodes";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace equivac
