#include "spiro/pipeline.hpp"

#include <algorithm>
#include <future>

#include "spiro/error.hpp"

namespace spiro {

Measurement measure(const AudioClip& clip, const CalibrationModel& calibration,
                    const AnalysisConfig& config) {
  Measurement m;
  m.analysis = analyze_frequency(clip, config);
  m.flow = freq_to_flow(calibration, m.analysis.trace);
  m.fit = fit_maneuver(m.flow);
  m.report = compute_report(m.fit, calibration.device_profile_id, config.grid_ms / 1000.0);

  auto& meta = m.report.pipeline_metadata;
  meta.band = m.analysis.band;
  meta.filter = m.analysis.filter;
  meta.psd_peak_hz = m.analysis.psd_peak_hz;
  meta.trial_peak_frequencies_hz = {m.analysis.trace.peak_frequency_hz()};
  meta.selected_trial = 0;
  meta.decision_log.insert(meta.decision_log.begin(), {
      "trace: first pass gated by loudness, rolloff and rolloff spread",
      "band: min/max of first-pass dominant frequencies, widened by the configured margin",
      "filter: 2nd-order Butterworth band-pass prototype, bilinear with prewarping, zero-phase",
      "fusion: moving average of each pass first, then pointwise minimum on the overlap",
  });
  return m;
}

TrialSet measure_trials(std::span<const AudioClip> clips, const CalibrationModel& calibration,
                        const AnalysisConfig& config) {
  if (clips.empty()) throw Error(ErrorCode::EmptyTrialSet, "no trials supplied");
  std::vector<std::future<Measurement>> jobs;
  jobs.reserve(clips.size());
  for (const auto& clip : clips) {
    jobs.push_back(std::async(std::launch::async, [&clip, &calibration, &config] {
      return measure(clip, calibration, config);
    }));
  }
  TrialSet set;
  for (auto& job : jobs) set.trials.push_back(job.get());

  std::vector<double> peaks;
  for (const auto& t : set.trials) peaks.push_back(t.analysis.trace.peak_frequency_hz());
  set.best = select_best_trial(peaks);
  auto& meta = set.trials[set.best].report.pipeline_metadata;
  meta.trial_peak_frequencies_hz = peaks;
  meta.selected_trial = set.best;
  return set;
}

double median_frequency(const AudioClip& clip, const AnalysisConfig& config) {
  auto freqs = analyze_frequency(clip, config).trace.freqs_hz;
  const auto mid = freqs.begin() + static_cast<std::ptrdiff_t>(freqs.size() / 2);
  std::nth_element(freqs.begin(), mid, freqs.end());
  if (freqs.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(freqs.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace spiro
