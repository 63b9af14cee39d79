#include "xmod/error.hpp"

namespace xmod {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InsufficientClasses: return "InsufficientClasses";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::AnchorRejectionExhausted: return "AnchorRejectionExhausted";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorFamily family_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonPositiveTemperature:
    case ErrorCode::AnchorRejectionExhausted:
      return ErrorFamily::Config;
    case ErrorCode::LabelOutOfRange:
    case ErrorCode::InsufficientSamples:
    case ErrorCode::InsufficientClasses:
    case ErrorCode::FormatVersionMismatch:
    case ErrorCode::ChecksumMismatch:
    case ErrorCode::TruncatedFile:
    case ErrorCode::Io:
    case ErrorCode::DimensionMismatch:
      return ErrorFamily::Data;
    case ErrorCode::ZeroVector:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::NonFiniteLoss:
      return ErrorFamily::Numeric;
  }
  return ErrorFamily::Numeric;
}

}  // namespace xmod
