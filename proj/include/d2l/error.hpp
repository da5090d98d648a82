#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace d2l {

enum class ErrorCode {
  InsufficientPoints,
  NonFiniteInput,
  AllDegenerate,
  ShapeMismatch,
  NonFiniteLoss,
  IncompatibleArchitecture,
  InvalidRate,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  InvalidDims,
  EmptyHistory,
  SingularMatrix,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as d2l::Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace d2l
