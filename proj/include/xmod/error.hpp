#pragma once

#include <stdexcept>
#include <string>

namespace xmod {

enum class ErrorCode {
  ZeroVector,
  DimensionMismatch,
  NonPositiveTemperature,
  LabelOutOfRange,
  InsufficientSamples,
  InsufficientClasses,
  NonFiniteGradient,
  NonFiniteLoss,
  FormatVersionMismatch,
  ChecksumMismatch,
  TruncatedFile,
  AnchorRejectionExhausted,
  InvalidArgument,
  Io,
};

const char* to_string(ErrorCode code);

// Exit-code families used by the command line tool.
enum class ErrorFamily { Config, Data, Numeric };

ErrorFamily family_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace xmod
