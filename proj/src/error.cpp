#include "d2l/error.hpp"

namespace d2l {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::IncompatibleArchitecture: return "IncompatibleArchitecture";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace d2l
