#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spiro/curve_model.hpp"
#include "spiro/filter.hpp"
#include "spiro/flow_curve.hpp"
#include "spiro/spectral.hpp"
#include "spiro/trace.hpp"

namespace spiro {

// Composite Simpson over the nodes of a uniform grid; an odd interval count
// closes with one trapezoid. Partial end intervals use linear interpolation.
double integrate_volume(const FlowCurve& curve, double t_from, double t_to);

// integrate_volume(curve, t_front, t_i) at every node, in O(n).
std::vector<double> cumulative_volume(const FlowCurve& curve);

inline constexpr double kLowRatioThreshold = 0.70;
inline constexpr double kHighRatioThreshold = 0.90;

double fev1_fvc_ratio(double fev1_l, double fvc_l);

struct PipelineMetadata {
  std::string calibration_id;
  std::optional<Band> band;
  std::optional<BandpassSpec> filter;
  std::optional<ManeuverFit> fit;
  double psd_peak_hz = 0.0;
  std::vector<double> trial_peak_frequencies_hz;
  std::size_t selected_trial = 0;
  std::vector<std::string> decision_log;
};

struct SpirometryReport {
  double fvc_l = 0.0;
  double fev1_l = 0.0;
  double fev1_fvc_ratio = 0.0;
  double pefr_lps = 0.0;
  double fvc50_ratio = 0.0;
  double fvc75_ratio = 0.0;
  double t0_s = 0.0;
  double t_end_s = 0.0;

  struct VolumeTime {
    std::vector<double> t_s;
    std::vector<double> volume_l;
  } volume_time;
  struct FlowVolume {
    std::vector<double> volume_l;
    std::vector<double> flow_lps;
  } flow_volume;

  QualityFlags quality_flags;
  PipelineMetadata pipeline_metadata;
};

struct ReportOptions {
  // Spacing of the exported volume-time and flow-volume curves.
  double curve_spacing_s = 0.01;
};

// Parameters of a flow curve on a uniform grid spanning the whole maneuver.
SpirometryReport compute_report(const FlowCurve& curve, std::string calibration_id,
                                const ReportOptions& options = {});

// Resamples the fitted maneuver on a grid of `grid_s` and reports on it.
SpirometryReport compute_report(const ManeuverFit& fit, std::string calibration_id,
                                double grid_s = 0.001, const ReportOptions& options = {});

// Index of the highest peak frequency, earliest on ties.
std::size_t select_best_trial(std::span<const double> peak_frequencies_hz);
std::size_t select_best_trial(std::span<const FrequencyTrace> traces);

}  // namespace spiro
