#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spiro/audio.hpp"
#include "spiro/filter.hpp"
#include "spiro/spectral.hpp"

namespace spiro {

// Dominant frequency over time. All three sequences have equal length and
// times are strictly increasing.
struct FrequencyTrace {
  std::vector<double> times_s;
  std::vector<double> freqs_hz;
  std::vector<double> confidence_db;

  std::size_t size() const { return times_s.size(); }
  bool empty() const { return times_s.empty(); }
  double peak_frequency_hz() const;
};

struct TraceGate {
  double loudness_floor_db = -35.0;
  double rolloff_fraction = 0.85;
  // Frames whose rolloff(fraction) - rolloff(1 - fraction) span exceeds this
  // share of Nyquist are treated as broadband and dropped.
  double max_spread_fraction = 0.25;
};

// One point per frame passing every gate: loudness >= floor, dominant bin at
// or below the rolloff bin, and a narrow rolloff spread. Throws NoTrace if no
// frame qualifies.
FrequencyTrace extract_trace(const Spectrogram& spec, const TraceGate& gate = {});

// Centered moving average over `window` points. Near the ends the window
// shrinks symmetrically, so the first and last points are kept as is.
FrequencyTrace smooth_trace(const FrequencyTrace& trace, std::size_t window);

// Linear interpolation inside the trace support.
double interpolate_frequency(const FrequencyTrace& trace, double t);

// Smooths both traces, resamples them onto the union of their time grids
// restricted to the common overlap, and takes the pointwise minimum
// frequency. Confidence is the pointwise maximum.
FrequencyTrace fuse_traces(const FrequencyTrace& first, const FrequencyTrace& second,
                           std::size_t smooth_window);

struct AnalysisConfig {
  StftParams stft;
  TraceGate gate;
  std::size_t smooth_window = 5;
  double band_margin = 0.10;
  double grid_ms = 1.0;
};

struct FrequencyAnalysis {
  FrequencyTrace trace;
  FrequencyTrace first_pass;
  FrequencyTrace second_pass;
  Band band;
  BandpassSpec filter;
  double psd_peak_hz = 0.0;
};

// First extraction, band from the gated first pass, dynamic band-pass,
// second extraction on the filtered clip, fusion.
FrequencyAnalysis analyze_frequency(const AudioClip& clip, const AnalysisConfig& config = {});

// time_s,freq_hz,confidence_db
void write_trace_csv(std::ostream& out, const FrequencyTrace& trace);

}  // namespace spiro
