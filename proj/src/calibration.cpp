#include "spiro/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spiro/error.hpp"

namespace spiro {

std::string_view quality_flag_name(QualityFlag flag) {
  switch (flag) {
    case QualityFlag::ClampedNegativeFlow: return "clamped_negative_flow";
    case QualityFlag::ExtrapolatedBeyondCalibration: return "extrapolated_beyond_calibration";
    case QualityFlag::RiseLinearFallback: return "rise_linear_fallback";
    case QualityFlag::RiseDegenerate: return "rise_degenerate";
    case QualityFlag::TailCapped: return "tail_capped";
    case QualityFlag::ObstructivePattern: return "obstructive_pattern";
    case QualityFlag::AtypicallyHighRatio: return "atypically_high_ratio";
  }
  return "unknown";
}

void validate(const FlowCurve& curve) {
  if (curve.times_s.size() != curve.flows_lps.size()) {
    throw Error(ErrorCode::InvalidParams, "flow curve length mismatch");
  }
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!std::isfinite(curve.times_s[i]) || !std::isfinite(curve.flows_lps[i]) ||
        curve.flows_lps[i] < 0.0) {
      throw Error(ErrorCode::InvalidParams, "flow curve has invalid sample");
    }
    if (i > 0 && !(curve.times_s[i] > curve.times_s[i - 1])) {
      throw Error(ErrorCode::InvalidParams, "flow curve times not strictly increasing");
    }
  }
}

CalibrationModel fit_calibration(std::span<const CalibrationPoint> points,
                                 std::string device_profile_id) {
  if (points.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two points");
  const double n = static_cast<double>(points.size());

  double mean_q = 0.0, mean_f = 0.0;
  for (const auto& p : points) {
    mean_q += p.flow_lps;
    mean_f += p.freq_hz;
  }
  mean_q /= n;
  mean_f /= n;

  double sqq = 0.0, sqf = 0.0, sff = 0.0;
  for (const auto& p : points) {
    const double dq = p.flow_lps - mean_q;
    const double df = p.freq_hz - mean_f;
    sqq += dq * dq;
    sqf += dq * df;
    sff += df * df;
  }
  if (!(sqq > 0.0)) throw Error(ErrorCode::DegenerateFit, "all calibration points share one flow");

  CalibrationModel model;
  model.device_profile_id = std::move(device_profile_id);
  model.slope = sqf / sqq;
  model.intercept = mean_f - model.slope * mean_q;
  if (!(model.slope > 0.0)) {
    throw Error(ErrorCode::DegenerateFit, "frequency does not increase with flow");
  }

  double ss_res = 0.0;
  for (const auto& p : points) {
    const double r = p.freq_hz - model.frequency_for(p.flow_lps);
    ss_res += r * r;
  }
  model.r_squared = sff > 0.0 ? std::clamp(1.0 - ss_res / sff, 0.0, 1.0) : 1.0;
  model.residual_std_hz = points.size() > 2 ? std::sqrt(ss_res / (n - 2.0)) : 0.0;

  const auto [lo, hi] = std::minmax_element(
      points.begin(), points.end(),
      [](const CalibrationPoint& a, const CalibrationPoint& b) { return a.flow_lps < b.flow_lps; });
  model.flow_range_lps = {lo->flow_lps, hi->flow_lps};
  return model;
}

FlowCurve freq_to_flow(const CalibrationModel& model, const FrequencyTrace& trace) {
  if (!(model.slope > 0.0) || !std::isfinite(model.intercept)) {
    throw Error(ErrorCode::InvalidParams, "calibration slope must be positive");
  }
  FlowCurve curve;
  curve.times_s = trace.times_s;
  curve.flows_lps.reserve(trace.size());
  const auto [qmin, qmax] = model.flow_range_lps;
  for (double f : trace.freqs_hz) {
    double q = model.flow_for(f);
    if (q < qmin || q > qmax) curve.quality_flags.insert(QualityFlag::ExtrapolatedBeyondCalibration);
    if (q < 0.0) {
      q = 0.0;
      curve.quality_flags.insert(QualityFlag::ClampedNegativeFlow);
    }
    curve.flows_lps.push_back(q);
  }
  return curve;
}

}  // namespace spiro
