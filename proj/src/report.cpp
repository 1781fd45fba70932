#include "spiro/report.hpp"

#include <algorithm>
#include <cmath>

#include "spiro/error.hpp"

namespace spiro {

namespace {

struct Grid {
  double start = 0.0;
  double step = 0.0;
};

Grid uniform_grid(const FlowCurve& curve) {
  validate(curve);
  if (curve.size() < 2) throw Error(ErrorCode::RangeOutOfBounds, "curve needs two points to integrate");
  const double start = curve.times_s.front();
  const double step = (curve.times_s.back() - start) / static_cast<double>(curve.size() - 1);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double expected = start + static_cast<double>(i) * step;
    if (std::abs(curve.times_s[i] - expected) > 1e-6 * step) {
      throw Error(ErrorCode::InvalidParams, "integration requires a uniform grid");
    }
  }
  return {start, step};
}

// Composite Simpson over nodes [i, j]; trapezoid on the last interval when
// the interval count is odd.
double simpson_nodes(const std::vector<double>& q, double h, std::size_t i, std::size_t j) {
  if (j <= i) return 0.0;
  std::size_t m = j - i;
  double sum = 0.0;
  if (m % 2 == 1) {
    sum += 0.5 * h * (q[j - 1] + q[j]);
    --m;
  }
  for (std::size_t k = i; k + 2 <= i + m; k += 2) sum += h / 3.0 * (q[k] + 4.0 * q[k + 1] + q[k + 2]);
  return sum;
}

double value_at(const FlowCurve& curve, const Grid& grid, double t) {
  const double pos = (t - grid.start) / grid.step;
  auto i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(curve.size() - 2)));
  const double w = pos - static_cast<double>(i);
  return curve.flows_lps[i] + w * (curve.flows_lps[i + 1] - curve.flows_lps[i]);
}

}  // namespace

double integrate_volume(const FlowCurve& curve, double t_from, double t_to) {
  const Grid grid = uniform_grid(curve);
  const double t_first = curve.times_s.front();
  const double t_last = curve.times_s.back();
  const double tol = 1e-9 * grid.step;
  if (t_from > t_to || t_from < t_first - tol || t_to > t_last + tol) {
    throw Error(ErrorCode::RangeOutOfBounds, "integration range outside the curve span");
  }
  t_from = std::max(t_from, t_first);
  t_to = std::min(t_to, t_last);

  const double last_index = static_cast<double>(curve.size() - 1);
  const double pos_a = (t_from - grid.start) / grid.step;
  const double pos_b = (t_to - grid.start) / grid.step;
  auto snap = [&](double pos, bool up) {
    const double r = std::round(pos);
    if (std::abs(pos - r) < 1e-9) return r;
    return up ? std::ceil(pos) : std::floor(pos);
  };
  const double ia = std::min(snap(pos_a, true), last_index);
  const double ib = std::max(snap(pos_b, false), 0.0);

  if (ia > ib) {
    // Both ends inside one interval.
    return 0.5 * (t_to - t_from) * (value_at(curve, grid, t_from) + value_at(curve, grid, t_to));
  }
  const auto i = static_cast<std::size_t>(ia);
  const auto j = static_cast<std::size_t>(ib);
  double volume = simpson_nodes(curve.flows_lps, grid.step, i, j);
  const double t_i = grid.start + ia * grid.step;
  const double t_j = grid.start + ib * grid.step;
  if (t_i - t_from > tol) volume += 0.5 * (t_i - t_from) * (value_at(curve, grid, t_from) + curve.flows_lps[i]);
  if (t_to - t_j > tol) volume += 0.5 * (t_to - t_j) * (curve.flows_lps[j] + value_at(curve, grid, t_to));
  return volume;
}

std::vector<double> cumulative_volume(const FlowCurve& curve) {
  const Grid grid = uniform_grid(curve);
  const auto& q = curve.flows_lps;
  const double h = grid.step;
  std::vector<double> out(curve.size(), 0.0);
  double even_sum = 0.0;  // Simpson sum up to the latest even node
  for (std::size_t k = 1; k < curve.size(); ++k) {
    if (k % 2 == 0) {
      even_sum += h / 3.0 * (q[k - 2] + 4.0 * q[k - 1] + q[k]);
      out[k] = even_sum;
    } else {
      out[k] = even_sum + 0.5 * h * (q[k - 1] + q[k]);
    }
  }
  return out;
}

double fev1_fvc_ratio(double fev1_l, double fvc_l) {
  if (!(fvc_l > 0.0)) return 0.0;
  return std::clamp(fev1_l / fvc_l, 0.0, 1.0);
}

SpirometryReport compute_report(const FlowCurve& curve, std::string calibration_id,
                                const ReportOptions& options) {
  uniform_grid(curve);
  SpirometryReport report;
  report.t0_s = curve.times_s.front();
  report.t_end_s = curve.times_s.back();
  report.quality_flags = curve.quality_flags;
  report.pipeline_metadata.calibration_id = std::move(calibration_id);

  const auto cumulative = cumulative_volume(curve);
  report.fvc_l = cumulative.back();
  report.fev1_l = integrate_volume(curve, report.t0_s, std::min(report.t0_s + 1.0, report.t_end_s));
  report.fev1_fvc_ratio = fev1_fvc_ratio(report.fev1_l, report.fvc_l);

  const auto peak_it = std::max_element(curve.flows_lps.begin(), curve.flows_lps.end());
  const auto peak_index = static_cast<std::size_t>(peak_it - curve.flows_lps.begin());
  report.pefr_lps = *peak_it;

  const double duration = report.t_end_s - report.t0_s;
  auto volume_fraction_at = [&](double x) {
    if (!(report.fvc_l > 0.0)) return 0.0;
    return integrate_volume(curve, report.t0_s, report.t0_s + x * duration) / report.fvc_l;
  };
  report.fvc50_ratio = volume_fraction_at(0.50);
  report.fvc75_ratio = volume_fraction_at(0.75);

  if (report.fev1_fvc_ratio < kLowRatioThreshold) report.quality_flags.insert(QualityFlag::ObstructivePattern);
  if (report.fev1_fvc_ratio > kHighRatioThreshold) report.quality_flags.insert(QualityFlag::AtypicallyHighRatio);

  const double step = duration / static_cast<double>(curve.size() - 1);
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(options.curve_spacing_s / step)));
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (i % stride != 0 && i != peak_index && i + 1 != curve.size()) continue;
    report.volume_time.t_s.push_back(curve.times_s[i]);
    report.volume_time.volume_l.push_back(cumulative[i]);
    report.flow_volume.volume_l.push_back(cumulative[i]);
    report.flow_volume.flow_lps.push_back(curve.flows_lps[i]);
  }
  report.pipeline_metadata.decision_log = {
      "FVC_x% = cumulative volume at t0 + x% of maneuver duration",
      "integration: composite Simpson on a uniform grid, trapezoid closes odd interval counts",
      "ratio flags: < 0.70 obstructive_pattern, > 0.90 atypically_high_ratio (advisory only)",
  };
  return report;
}

SpirometryReport compute_report(const ManeuverFit& fit, std::string calibration_id, double grid_s,
                                const ReportOptions& options) {
  auto report = compute_report(extrapolate(fit, grid_s), std::move(calibration_id), options);
  auto& log = report.pipeline_metadata.decision_log;
  log.insert(log.begin(), fit.decision_log.begin(), fit.decision_log.end());
  report.pipeline_metadata.fit = fit;
  return report;
}

std::size_t select_best_trial(std::span<const double> peak_frequencies_hz) {
  if (peak_frequencies_hz.empty()) throw Error(ErrorCode::EmptyTrialSet, "no trials to choose from");
  return static_cast<std::size_t>(
      std::max_element(peak_frequencies_hz.begin(), peak_frequencies_hz.end()) - peak_frequencies_hz.begin());
}

std::size_t select_best_trial(std::span<const FrequencyTrace> traces) {
  std::vector<double> peaks;
  peaks.reserve(traces.size());
  for (const auto& t : traces) peaks.push_back(t.peak_frequency_hz());
  return select_best_trial(peaks);
}

}  // namespace spiro
