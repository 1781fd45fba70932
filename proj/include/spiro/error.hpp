#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spiro {

enum class ErrorCode {
  InvalidClip,
  MalformedFile,
  UnsupportedEncoding,
  EmptyAfterTrim,
  ClipTooShort,
  NoSignal,
  InvalidBand,
  RateMismatch,
  NoTrace,
  InsufficientData,
  DegenerateFit,
  EmptyCurve,
  FitDiverged,
  RangeOutOfBounds,
  EmptyTrialSet,
  InvalidParams,
  FrequencyAboveNyquist,
  BadAudio,
  UnknownCalibration,
  CalibrationNotFound,
  NotFound,
  Io,
  Parse,
};

// Stable snake_case identifier used in error JSON and HTTP bodies.
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace spiro
