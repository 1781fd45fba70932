#include "spiro/trace.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iterator>
#include <ostream>

#include "spiro/error.hpp"

namespace spiro {

double FrequencyTrace::peak_frequency_hz() const {
  if (freqs_hz.empty()) return 0.0;
  return *std::max_element(freqs_hz.begin(), freqs_hz.end());
}

FrequencyTrace extract_trace(const Spectrogram& spec, const TraceGate& gate) {
  if (spec.n_frames == 0) throw Error(ErrorCode::NoTrace, "empty spectrogram");
  const auto loudness = frame_loudness_db(spec);
  const double bin = spec.bin_width_hz();
  const double max_spread = gate.max_spread_fraction * spec.nyquist_hz();

  FrequencyTrace trace;
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    if (loudness[f] < gate.loudness_floor_db) continue;
    const auto frame = spec.frame(f);
    const double upper = frame_rolloff_hz(frame, bin, gate.rolloff_fraction);
    const auto peak = dominant_frequency(spec, f);
    // Compare on the bin grid: the rolloff is bin-quantized.
    if (spec.bin_freqs_hz[peak.bin] > upper) continue;
    const double lower = frame_rolloff_hz(frame, bin, 1.0 - gate.rolloff_fraction);
    if (std::abs(upper - lower) > max_spread) continue;
    if (!(peak.freq_hz > 0.0)) continue;
    trace.times_s.push_back(spec.frame_times_s[f]);
    trace.freqs_hz.push_back(peak.freq_hz);
    trace.confidence_db.push_back(loudness[f]);
  }
  if (trace.empty()) throw Error(ErrorCode::NoTrace, "no frame passed the loudness/rolloff gates");
  return trace;
}

FrequencyTrace smooth_trace(const FrequencyTrace& trace, std::size_t window) {
  const std::size_t half = window / 2;
  const std::size_t n = trace.size();
  FrequencyTrace out = trace;
  if (half == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    // Shrink symmetrically near the ends so the average stays centered.
    const std::size_t h = std::min({half, i, n - 1 - i});
    const std::size_t lo = i - h;
    const std::size_t hi = i + h;
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += trace.freqs_hz[j];
    out.freqs_hz[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

namespace {

// Index i such that times[i] <= t <= times[i + 1]; assumes t inside support.
std::size_t segment_index(const std::vector<double>& times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  auto i = static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
  return std::min(i, times.size() >= 2 ? times.size() - 2 : 0);
}

double interpolate(const std::vector<double>& times, const std::vector<double>& values, double t) {
  if (times.size() == 1) return values.front();
  const std::size_t i = segment_index(times, t);
  const double t0 = times[i], t1 = times[i + 1];
  if (t == t0) return values[i];
  if (t == t1) return values[i + 1];
  const double w = (t - t0) / (t1 - t0);
  return values[i] + w * (values[i + 1] - values[i]);
}

}  // namespace

double interpolate_frequency(const FrequencyTrace& trace, double t) {
  if (trace.empty()) throw Error(ErrorCode::NoTrace, "empty trace");
  return interpolate(trace.times_s, trace.freqs_hz, t);
}

FrequencyTrace fuse_traces(const FrequencyTrace& first, const FrequencyTrace& second,
                           std::size_t smooth_window) {
  const auto a = smooth_trace(first, smooth_window);
  const auto b = smooth_trace(second, smooth_window);
  FrequencyTrace out;
  if (a.empty() || b.empty()) return out;

  const double start = std::max(a.times_s.front(), b.times_s.front());
  const double end = std::min(a.times_s.back(), b.times_s.back());
  if (start > end) return out;

  std::vector<double> grid;
  std::set_union(a.times_s.begin(), a.times_s.end(), b.times_s.begin(), b.times_s.end(),
                 std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  for (double t : grid) {
    if (t < start || t > end) continue;
    out.times_s.push_back(t);
    out.freqs_hz.push_back(std::min(interpolate(a.times_s, a.freqs_hz, t),
                                    interpolate(b.times_s, b.freqs_hz, t)));
    out.confidence_db.push_back(std::max(interpolate(a.times_s, a.confidence_db, t),
                                         interpolate(b.times_s, b.confidence_db, t)));
  }
  return out;
}

FrequencyAnalysis analyze_frequency(const AudioClip& clip, const AnalysisConfig& config) {
  validate(clip);
  if (clip.peak() == 0.0) throw Error(ErrorCode::NoTrace, "clip is silent");

  FrequencyAnalysis result;
  const auto first_spec = stft(clip, config.stft);
  result.first_pass = extract_trace(first_spec, config.gate);

  const auto [lo, hi] = std::minmax_element(result.first_pass.freqs_hz.begin(),
                                            result.first_pass.freqs_hz.end());
  result.band = {*lo, *hi};
  // A steady tone yields a zero-width band; open it to two bins.
  const double bin = first_spec.bin_width_hz();
  Band design_band = result.band;
  if (design_band.fmax_hz - design_band.fmin_hz < 2.0 * bin) {
    const double center = 0.5 * (design_band.fmin_hz + design_band.fmax_hz);
    design_band = {center - bin, center + bin};
  }
  result.psd_peak_hz = power_spectral_density(clip, config.stft.window_len).peak_frequency_hz();

  result.filter = design_bandpass(design_band.fmin_hz, design_band.fmax_hz, clip.sample_rate_hz,
                                  config.band_margin);
  const auto filtered = apply_filter(clip, result.filter);
  result.second_pass = extract_trace(stft(filtered, config.stft), config.gate);

  result.trace = fuse_traces(result.first_pass, result.second_pass, config.smooth_window);
  if (result.trace.empty()) throw Error(ErrorCode::NoTrace, "extraction passes do not overlap");
  return result;
}

void write_trace_csv(std::ostream& out, const FrequencyTrace& trace) {
  out << "time_s,freq_hz,confidence_db\n" << std::setprecision(10);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << trace.times_s[i] << ',' << trace.freqs_hz[i] << ',' << trace.confidence_db[i] << '\n';
  }
}

}  // namespace spiro
