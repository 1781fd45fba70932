#include "spiro/error.hpp"

namespace spiro {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidClip: return "invalid_clip";
    case ErrorCode::MalformedFile: return "malformed_file";
    case ErrorCode::UnsupportedEncoding: return "unsupported_encoding";
    case ErrorCode::EmptyAfterTrim: return "empty_after_trim";
    case ErrorCode::ClipTooShort: return "clip_too_short";
    case ErrorCode::NoSignal: return "no_signal";
    case ErrorCode::InvalidBand: return "invalid_band";
    case ErrorCode::RateMismatch: return "rate_mismatch";
    case ErrorCode::NoTrace: return "no_trace";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::DegenerateFit: return "degenerate_fit";
    case ErrorCode::EmptyCurve: return "empty_curve";
    case ErrorCode::FitDiverged: return "fit_diverged";
    case ErrorCode::RangeOutOfBounds: return "range_out_of_bounds";
    case ErrorCode::EmptyTrialSet: return "empty_trial_set";
    case ErrorCode::InvalidParams: return "invalid_params";
    case ErrorCode::FrequencyAboveNyquist: return "frequency_above_nyquist";
    case ErrorCode::BadAudio: return "bad_audio";
    case ErrorCode::UnknownCalibration: return "unknown_calibration";
    case ErrorCode::CalibrationNotFound: return "calibration_not_found";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::Parse: return "parse_error";
  }
  return "unknown";
}

}  // namespace spiro
