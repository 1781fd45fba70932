#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "spiro/audio.hpp"

namespace spiro {

// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Butterworth band-pass built from a second-order low-pass prototype, so the
// discrete transfer function has degree 4 and is held as two cascaded
// sections. `b`/`a` are the expanded polynomial coefficients of the cascade.
struct BandpassSpec {
  double low_cut_hz = 0.0;
  double high_cut_hz = 0.0;
  int order = 2;
  int sample_rate_hz = 0;
  std::vector<Biquad> sections;
  std::vector<double> b;
  std::vector<double> a;

  std::complex<double> response(double freq_hz) const;
  double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }
  std::vector<std::complex<double>> poles() const;
  bool is_stable() const;
  // Samples for the slowest pole's impulse envelope to fall by 60 dB.
  std::size_t settling_samples() const;
};

// Edges are widened to fmin*(1-margin) and fmax*(1+margin) before design.
// Throws InvalidBand unless 0 < low < high < fs/2 after widening.
BandpassSpec design_bandpass(double fmin_hz, double fmax_hz, int sample_rate_hz,
                             double margin_fraction = 0.0);

// Single causal pass through the cascade.
std::vector<double> filter_forward(const BandpassSpec& spec, const std::vector<double>& x);

// Zero-phase forward-backward filtering with odd-reflection padding of three
// settling lengths at each end. Output length equals input length.
AudioClip apply_filter(const AudioClip& clip, const BandpassSpec& spec);

}  // namespace spiro
