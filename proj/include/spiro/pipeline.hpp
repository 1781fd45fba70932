#pragma once

#include <span>
#include <vector>

#include "spiro/audio.hpp"
#include "spiro/calibration.hpp"
#include "spiro/curve_model.hpp"
#include "spiro/report.hpp"
#include "spiro/trace.hpp"

namespace spiro {

struct Measurement {
  FrequencyAnalysis analysis;
  FlowCurve flow;
  ManeuverFit fit;
  SpirometryReport report;
};

// Audio -> frequency trace -> flow -> fitted maneuver -> report.
Measurement measure(const AudioClip& clip, const CalibrationModel& calibration,
                    const AnalysisConfig& config = {});

struct TrialSet {
  std::vector<Measurement> trials;
  std::size_t best = 0;
};

// Measures every clip and picks the trial with the highest peak frequency.
// The selected report records all trial peak frequencies.
TrialSet measure_trials(std::span<const AudioClip> clips, const CalibrationModel& calibration,
                        const AnalysisConfig& config = {});

// Median fused-trace frequency; used when calibrating from recordings.
double median_frequency(const AudioClip& clip, const AnalysisConfig& config = {});

}  // namespace spiro
