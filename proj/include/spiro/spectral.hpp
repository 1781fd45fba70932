#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "spiro/audio.hpp"

namespace spiro {

enum class WindowKind { Hann, Hamming, Rectangular };

std::string_view window_kind_name(WindowKind kind);
WindowKind parse_window_kind(std::string_view name);

// Periodic (DFT-even) window of length n.
std::vector<double> make_window(WindowKind kind, std::size_t n);

struct StftParams {
  std::size_t window_len = 2048;
  std::size_t hop = 512;
  WindowKind window = WindowKind::Hann;
};

// Level reported for frames with no energy.
inline constexpr double kSilenceDb = -200.0;

// Magnitude spectrogram, frames × bins, row-major. The FFT length equals the
// window length. Frames start at every multiple of `hop` inside the clip;
// frames running past the end are zero-padded.
struct Spectrogram {
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<double> magnitudes;
  std::vector<double> frame_times_s;  // frame centers
  std::vector<double> bin_freqs_hz;
  std::size_t window_len = 0;
  std::size_t hop = 0;
  WindowKind window_kind = WindowKind::Hann;
  int sample_rate_hz = 0;
  double window_energy = 0.0;   // sum of squared window taps
  double reference_peak = 0.0;  // max |sample| of the analyzed clip

  std::span<const double> frame(std::size_t f) const {
    return {magnitudes.data() + f * n_bins, n_bins};
  }
  double at(std::size_t f, std::size_t k) const { return magnitudes[f * n_bins + k]; }
  double bin_width_hz() const { return static_cast<double>(sample_rate_hz) / window_len; }
  double nyquist_hz() const { return sample_rate_hz / 2.0; }
};

Spectrogram stft(const AudioClip& clip, const StftParams& params = {});

// Energy of the windowed time-domain frame, recovered from its one-sided
// magnitude spectrum (Parseval).
double frame_energy(const Spectrogram& spec, std::size_t frame);

// Window-gain compensated frame RMS in dB relative to the clip peak.
std::vector<double> frame_loudness_db(const Spectrogram& spec);

struct PowerSpectrum {
  std::vector<double> freqs_hz;
  std::vector<double> density;  // one-sided, units^2 / Hz
  double bin_width_hz = 0.0;

  double integral() const;
  double peak_frequency_hz() const;
};

// Welch averaged periodogram: Hann segments, 50% overlap, per-segment mean
// removal.
PowerSpectrum power_spectral_density(const AudioClip& clip, std::size_t segment_len);

// Lowest bin frequency at which the cumulative energy of the frame reaches
// `fraction` of the total. Zero-energy frames report 0.
double frame_rolloff_hz(std::span<const double> magnitudes, double bin_width_hz,
                        double fraction);
std::vector<double> spectral_rolloff(const Spectrogram& spec, double fraction);

struct DominantPeak {
  std::size_t bin = 0;
  double freq_hz = 0.0;  // parabolic interpolation around `bin`
  double magnitude = 0.0;
};

DominantPeak dominant_frequency(const Spectrogram& spec, std::size_t frame);

struct Band {
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;
};

// Min and max dominant frequency over frames louder than the floor.
Band band_estimate(const Spectrogram& spec, double loudness_floor_db);

struct SpectralSummary {
  Band band;
  PowerSpectrum psd;
  std::vector<double> rolloff_hz;
  std::vector<double> loudness_db;
};

SpectralSummary summarize(const AudioClip& clip, const StftParams& params,
                          double rolloff_fraction, double loudness_floor_db);

// frame_time_s,bin_freq_hz,magnitude
void write_spectrogram_csv(std::ostream& out, const Spectrogram& spec);

}  // namespace spiro
