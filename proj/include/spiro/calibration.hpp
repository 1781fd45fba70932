#pragma once

#include <span>
#include <string>
#include <utility>

#include "spiro/flow_curve.hpp"
#include "spiro/trace.hpp"

namespace spiro {

struct CalibrationPoint {
  double flow_lps = 0.0;
  double freq_hz = 0.0;
};

// freq = slope * flow + intercept
struct CalibrationModel {
  double slope = 0.0;      // Hz per L/s
  double intercept = 0.0;  // Hz
  double r_squared = 0.0;
  double residual_std_hz = 0.0;
  std::pair<double, double> flow_range_lps{0.0, 0.0};
  std::string device_profile_id;
  std::string created_at;  // ISO-8601 UTC

  double frequency_for(double flow_lps) const { return slope * flow_lps + intercept; }
  double flow_for(double freq_hz) const { return (freq_hz - intercept) / slope; }
};

// Ordinary least squares. Throws InsufficientData for fewer than two points
// and DegenerateFit when flows have no spread or the slope is not positive.
CalibrationModel fit_calibration(std::span<const CalibrationPoint> points,
                                 std::string device_profile_id = "default");

// Negative flows clamp to zero (ClampedNegativeFlow); flows outside the
// fitted range are kept and flagged ExtrapolatedBeyondCalibration.
FlowCurve freq_to_flow(const CalibrationModel& model, const FrequencyTrace& trace);

}  // namespace spiro
