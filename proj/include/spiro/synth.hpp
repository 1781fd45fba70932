#pragma once

#include <cstdint>
#include <string_view>

#include "spiro/audio.hpp"
#include "spiro/calibration.hpp"
#include "spiro/flow_curve.hpp"

namespace spiro {

// Ground-truth maneuver: smoothstep cubic rise from zero flow at t = 0 to the
// peak at t_peak (zero slope at both ends), then Hill decay, until duration.
class FlowProfile {
 public:
  FlowProfile(double pefr_lps, double t_peak_s, double steepness, double half_decay_s,
              double duration_s);

  double pefr_lps() const { return pefr_; }
  double t_peak_s() const { return t_peak_; }
  double steepness() const { return steepness_; }
  double half_decay_s() const { return half_decay_; }
  double duration_s() const { return duration_; }

  double flow_at(double t) const;
  // Adaptive-quadrature volume over [t_from, t_to] (clipped to the profile).
  double volume(double t_from, double t_to) const;
  double fvc_l() const { return volume(0.0, duration_); }
  double fev1_l() const { return volume(0.0, 1.0); }

  FlowCurve sample(double dt_s) const;

 private:
  double pefr_, t_peak_, steepness_, half_decay_, duration_;
};

// Throws InvalidParams unless all parameters are positive and t_peak < duration.
FlowProfile reference_flow_profile(double pefr_lps, double t_peak_s, double steepness,
                                   double half_decay_s, double duration_s);

enum class AmplitudeModel { Constant, ProportionalToFlow };

std::string_view amplitude_model_name(AmplitudeModel model);
AmplitudeModel parse_amplitude_model(std::string_view name);

struct SynthProfile {
  FlowProfile flow;
  CalibrationModel calibration;
  double snr_db = 30.0;
  AmplitudeModel amplitude_model = AmplitudeModel::ProportionalToFlow;
};

struct SynthOptions {
  int sample_rate_hz = 44100;
  std::uint64_t seed = 1;
  double lead_silence_s = 0.25;
  double trail_silence_s = 0.25;
  double output_peak = 0.9;
};

// Phase-continuous whistle with instantaneous frequency slope*Q(t)+intercept
// over the maneuver, white Gaussian noise at snr_db measured over the active
// span, exact zeros outside it. Profile time 0 sits at lead_silence_s.
AudioClip synthesize_whistle(const SynthProfile& profile, const SynthOptions& options = {});

}  // namespace spiro
