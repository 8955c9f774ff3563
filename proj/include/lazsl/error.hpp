#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lazsl {

enum class ErrorCode {
  ZeroVector,
  DimensionMismatch,
  ShapeMismatch,
  InvalidArgument,
  DegenerateImage,
  NumericalBlowup,
  TooLarge,
  EmptyClassList,
  CorruptManifest,
  UnsupportedDtype,
  MissingTensorFile,
  IdMismatch,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateImage: return "DegenerateImage";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::EmptyClassList: return "EmptyClassList";
    case ErrorCode::CorruptManifest: return "CorruptManifest";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::MissingTensorFile: return "MissingTensorFile";
    case ErrorCode::IdMismatch: return "IdMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace lazsl
