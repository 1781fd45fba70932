#include "spiro/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include "fft.hpp"
#include "spiro/error.hpp"

namespace spiro {

std::string_view window_kind_name(WindowKind kind) {
  switch (kind) {
    case WindowKind::Hann: return "hann";
    case WindowKind::Hamming: return "hamming";
    case WindowKind::Rectangular: return "rectangular";
  }
  return "hann";
}

WindowKind parse_window_kind(std::string_view name) {
  if (name == "hann") return WindowKind::Hann;
  if (name == "hamming") return WindowKind::Hamming;
  if (name == "rectangular" || name == "rect") return WindowKind::Rectangular;
  throw Error(ErrorCode::InvalidParams, "unknown window kind: " + std::string(name));
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = two_pi * static_cast<double>(i) / static_cast<double>(n);
    switch (kind) {
      case WindowKind::Hann: w[i] = 0.5 - 0.5 * std::cos(phase); break;
      case WindowKind::Hamming: w[i] = 0.54 - 0.46 * std::cos(phase); break;
      case WindowKind::Rectangular: break;
    }
  }
  return w;
}

Spectrogram stft(const AudioClip& clip, const StftParams& params) {
  validate(clip);
  const std::size_t n = clip.samples.size();
  if (params.window_len < 4) throw Error(ErrorCode::InvalidParams, "window too short");
  if (params.hop == 0 || params.hop > params.window_len) {
    throw Error(ErrorCode::InvalidParams, "hop must be in (0, window_len]");
  }
  if (params.window_len > n) {
    throw Error(ErrorCode::ClipTooShort, "clip shorter than one analysis window");
  }

  Spectrogram spec;
  spec.window_len = params.window_len;
  spec.hop = params.hop;
  spec.window_kind = params.window;
  spec.sample_rate_hz = clip.sample_rate_hz;
  spec.n_bins = params.window_len / 2 + 1;
  spec.n_frames = (n + params.hop - 1) / params.hop;
  spec.reference_peak = clip.peak();

  const auto window = make_window(params.window, params.window_len);
  for (double w : window) spec.window_energy += w * w;

  const double fs = clip.sample_rate_hz;
  spec.bin_freqs_hz.resize(spec.n_bins);
  for (std::size_t k = 0; k < spec.n_bins; ++k) {
    spec.bin_freqs_hz[k] = static_cast<double>(k) * fs / static_cast<double>(params.window_len);
  }
  spec.frame_times_s.resize(spec.n_frames);
  spec.magnitudes.resize(spec.n_frames * spec.n_bins);

  detail::RealFft fft(params.window_len);
  std::vector<double> frame(params.window_len);
  std::vector<std::complex<double>> bins;
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    const std::size_t start = f * params.hop;
    for (std::size_t i = 0; i < params.window_len; ++i) {
      const std::size_t idx = start + i;
      frame[i] = idx < n ? clip.samples[idx] * window[i] : 0.0;
    }
    fft.forward(frame, bins);
    for (std::size_t k = 0; k < spec.n_bins; ++k) spec.magnitudes[f * spec.n_bins + k] = std::abs(bins[k]);
    spec.frame_times_s[f] =
        (static_cast<double>(start) + static_cast<double>(params.window_len) / 2.0) / fs;
  }
  return spec;
}

double frame_energy(const Spectrogram& spec, std::size_t frame) {
  const auto mags = spec.frame(frame);
  const std::size_t n = spec.window_len;
  double sum = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    sum += (unpaired ? 1.0 : 2.0) * mags[k] * mags[k];
  }
  return sum / static_cast<double>(n);
}

std::vector<double> frame_loudness_db(const Spectrogram& spec) {
  std::vector<double> out(spec.n_frames, kSilenceDb);
  if (spec.reference_peak <= 0.0 || spec.window_energy <= 0.0) return out;
  const double ref = spec.reference_peak * spec.reference_peak;
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    const double mean_square = frame_energy(spec, f) / spec.window_energy;
    if (mean_square > 0.0) out[f] = std::max(kSilenceDb, 10.0 * std::log10(mean_square / ref));
  }
  return out;
}

double PowerSpectrum::integral() const {
  double sum = 0.0;
  for (double d : density) sum += d;
  return sum * bin_width_hz;
}

double PowerSpectrum::peak_frequency_hz() const {
  if (density.empty()) return 0.0;
  const auto it = std::max_element(density.begin(), density.end());
  return freqs_hz[static_cast<std::size_t>(it - density.begin())];
}

PowerSpectrum power_spectral_density(const AudioClip& clip, std::size_t segment_len) {
  validate(clip);
  const std::size_t n = clip.samples.size();
  if (segment_len < 4) throw Error(ErrorCode::InvalidParams, "segment too short");
  if (segment_len > n) throw Error(ErrorCode::ClipTooShort, "clip shorter than one PSD segment");

  const auto window = make_window(WindowKind::Hann, segment_len);
  double window_energy = 0.0;
  for (double w : window) window_energy += w * w;

  const std::size_t hop = std::max<std::size_t>(1, segment_len / 2);
  const std::size_t n_bins = segment_len / 2 + 1;
  const double fs = clip.sample_rate_hz;

  PowerSpectrum psd;
  psd.bin_width_hz = fs / static_cast<double>(segment_len);
  psd.freqs_hz.resize(n_bins);
  psd.density.assign(n_bins, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k) psd.freqs_hz[k] = static_cast<double>(k) * psd.bin_width_hz;

  detail::RealFft fft(segment_len);
  std::vector<double> seg(segment_len);
  std::vector<std::complex<double>> bins;
  std::size_t count = 0;
  for (std::size_t start = 0; start + segment_len <= n; start += hop, ++count) {
    double mean = 0.0;
    for (std::size_t i = 0; i < segment_len; ++i) mean += clip.samples[start + i];
    mean /= static_cast<double>(segment_len);
    for (std::size_t i = 0; i < segment_len; ++i) seg[i] = (clip.samples[start + i] - mean) * window[i];
    fft.forward(seg, bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const bool unpaired = k == 0 || (segment_len % 2 == 0 && k == segment_len / 2);
      psd.density[k] += (unpaired ? 1.0 : 2.0) * std::norm(bins[k]);
    }
  }
  const double scale = 1.0 / (fs * window_energy * static_cast<double>(count));
  for (double& d : psd.density) d *= scale;
  return psd;
}

double frame_rolloff_hz(std::span<const double> magnitudes, double bin_width_hz, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidParams, "rolloff fraction must be in (0, 1)");
  }
  double total = 0.0;
  for (double m : magnitudes) total += m * m;
  if (total <= 0.0) return 0.0;
  const double target = fraction * total;
  double cum = 0.0;
  for (std::size_t k = 0; k < magnitudes.size(); ++k) {
    cum += magnitudes[k] * magnitudes[k];
    if (cum >= target) return static_cast<double>(k) * bin_width_hz;
  }
  return static_cast<double>(magnitudes.size() - 1) * bin_width_hz;
}

std::vector<double> spectral_rolloff(const Spectrogram& spec, double fraction) {
  std::vector<double> out(spec.n_frames);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    out[f] = frame_rolloff_hz(spec.frame(f), spec.bin_width_hz(), fraction);
  }
  return out;
}

DominantPeak dominant_frequency(const Spectrogram& spec, std::size_t frame) {
  const auto mags = spec.frame(frame);
  const auto it = std::max_element(mags.begin(), mags.end());
  DominantPeak peak;
  peak.bin = static_cast<std::size_t>(it - mags.begin());
  peak.magnitude = *it;
  peak.freq_hz = spec.bin_freqs_hz[peak.bin];
  if (peak.bin == 0 || peak.bin + 1 >= mags.size() || peak.magnitude <= 0.0) return peak;

  double a = mags[peak.bin - 1];
  double b = mags[peak.bin];
  double c = mags[peak.bin + 1];
  // Interpolate on log magnitude when possible; it is close to exact for the
  // Gaussian-like main lobe of smooth windows.
  if (a > 0.0 && c > 0.0) {
    a = std::log(a);
    b = std::log(b);
    c = std::log(c);
  }
  const double denom = a - 2.0 * b + c;
  if (denom < 0.0) {
    const double delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    peak.freq_hz += delta * spec.bin_width_hz();
  }
  return peak;
}

Band band_estimate(const Spectrogram& spec, double loudness_floor_db) {
  if (spec.n_frames == 0) throw Error(ErrorCode::NoSignal, "empty spectrogram");
  const auto loudness = frame_loudness_db(spec);
  Band band{spec.nyquist_hz(), 0.0};
  bool any = false;
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    if (!(loudness[f] > loudness_floor_db)) continue;
    const double freq = std::clamp(dominant_frequency(spec, f).freq_hz, 0.0, spec.nyquist_hz());
    band.fmin_hz = std::min(band.fmin_hz, freq);
    band.fmax_hz = std::max(band.fmax_hz, freq);
    any = true;
  }
  if (!any) throw Error(ErrorCode::NoSignal, "no frame above the loudness floor");
  return band;
}

SpectralSummary summarize(const AudioClip& clip, const StftParams& params,
                          double rolloff_fraction, double loudness_floor_db) {
  const auto spec = stft(clip, params);
  SpectralSummary summary;
  summary.band = band_estimate(spec, loudness_floor_db);
  summary.psd = power_spectral_density(clip, params.window_len);
  summary.rolloff_hz = spectral_rolloff(spec, rolloff_fraction);
  summary.loudness_db = frame_loudness_db(spec);
  return summary;
}

void write_spectrogram_csv(std::ostream& out, const Spectrogram& spec) {
  out << "frame_time_s,bin_freq_hz,magnitude\n" << std::setprecision(8);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    for (std::size_t k = 0; k < spec.n_bins; ++k) {
      out << spec.frame_times_s[f] << ',' << spec.bin_freqs_hz[k] << ',' << spec.at(f, k) << '\n';
    }
  }
}

}  // namespace spiro
