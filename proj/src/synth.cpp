#include "spiro/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "spiro/error.hpp"

namespace spiro {

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

}  // namespace

FlowProfile::FlowProfile(double pefr_lps, double t_peak_s, double steepness, double half_decay_s,
                         double duration_s)
    : pefr_(pefr_lps),
      t_peak_(t_peak_s),
      steepness_(steepness),
      half_decay_(half_decay_s),
      duration_(duration_s) {
  const bool positive = pefr_lps > 0.0 && t_peak_s > 0.0 && steepness > 0.0 && half_decay_s > 0.0 &&
                        duration_s > 0.0;
  if (!positive || !(t_peak_s < duration_s)) {
    throw Error(ErrorCode::InvalidParams, "profile parameters must be positive with t_peak < duration");
  }
}

FlowProfile reference_flow_profile(double pefr_lps, double t_peak_s, double steepness,
                                   double half_decay_s, double duration_s) {
  return FlowProfile(pefr_lps, t_peak_s, steepness, half_decay_s, duration_s);
}

double FlowProfile::flow_at(double t) const {
  if (t <= 0.0 || t > duration_) return 0.0;
  if (t <= t_peak_) {
    const double s = t / t_peak_;
    return pefr_ * s * s * (3.0 - 2.0 * s);
  }
  return pefr_ / (1.0 + std::pow((t - t_peak_) / half_decay_, steepness_));
}

double FlowProfile::volume(double t_from, double t_to) const {
  t_from = std::max(t_from, 0.0);
  t_to = std::min(t_to, duration_);
  if (!(t_to > t_from)) return 0.0;
  const auto f = [this](double t) { return flow_at(t); };
  // Split at the peak where the second derivative jumps.
  if (t_from < t_peak_ && t_to > t_peak_) {
    return integrate(f, t_from, t_peak_, 1e-13) + integrate(f, t_peak_, t_to, 1e-13);
  }
  return integrate(f, t_from, t_to, 1e-13);
}

FlowCurve FlowProfile::sample(double dt_s) const {
  if (!(dt_s > 0.0)) throw Error(ErrorCode::InvalidParams, "sample step must be positive");
  FlowCurve curve;
  const auto n = static_cast<std::size_t>(std::floor(duration_ / dt_s + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * dt_s;
    curve.times_s.push_back(t);
    curve.flows_lps.push_back(flow_at(t));
  }
  return curve;
}

std::string_view amplitude_model_name(AmplitudeModel model) {
  return model == AmplitudeModel::Constant ? "constant" : "proportional";
}

AmplitudeModel parse_amplitude_model(std::string_view name) {
  if (name == "constant") return AmplitudeModel::Constant;
  if (name == "proportional" || name == "proportional-to-flow") return AmplitudeModel::ProportionalToFlow;
  throw Error(ErrorCode::InvalidParams, "unknown amplitude model: " + std::string(name));
}

AudioClip synthesize_whistle(const SynthProfile& profile, const SynthOptions& options) {
  const auto& cal = profile.calibration;
  const auto& flow = profile.flow;
  const double fs = options.sample_rate_hz;
  if (options.sample_rate_hz < kMinSampleRate || options.sample_rate_hz > kMaxSampleRate) {
    throw Error(ErrorCode::InvalidParams, "sample rate out of range");
  }
  if (!std::isfinite(profile.snr_db)) throw Error(ErrorCode::InvalidParams, "SNR must be finite");
  if (!(cal.slope > 0.0) || !(cal.intercept > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "calibration must map zero flow to a positive frequency");
  }
  if (options.lead_silence_s < 0.0 || options.trail_silence_s < 0.0 || !(options.output_peak > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "invalid synthesis options");
  }
  const double f_max = cal.frequency_for(flow.pefr_lps());
  if (f_max >= fs / 2.0) {
    throw Error(ErrorCode::FrequencyAboveNyquist,
                "profile reaches " + std::to_string(f_max) + " Hz, Nyquist is " + std::to_string(fs / 2.0));
  }

  const auto lead = static_cast<std::size_t>(std::lround(options.lead_silence_s * fs));
  const auto active = static_cast<std::size_t>(std::lround(flow.duration_s() * fs));
  const auto trail = static_cast<std::size_t>(std::lround(options.trail_silence_s * fs));

  AudioClip clip;
  clip.sample_rate_hz = options.sample_rate_hz;
  clip.source_id = "synth:seed=" + std::to_string(options.seed);
  clip.samples.assign(lead + active + trail, 0.0);

  double phase = 0.0;
  double power = 0.0;
  for (std::size_t i = 0; i < active; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double q = flow.flow_at(t);
    const double amp = profile.amplitude_model == AmplitudeModel::Constant ? 1.0 : q / flow.pefr_lps();
    const double s = amp * std::sin(phase);
    clip.samples[lead + i] = s;
    power += s * s;
    // Midpoint rule on the instantaneous frequency keeps the phase continuous.
    const double f_mid = cal.frequency_for(flow.flow_at(t + 0.5 / fs));
    phase = std::fmod(phase + 2.0 * std::numbers::pi * f_mid / fs, 2.0 * std::numbers::pi);
  }
  power /= static_cast<double>(std::max<std::size_t>(active, 1));

  const double sigma = std::sqrt(power / std::pow(10.0, profile.snr_db / 10.0));
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < active; ++i) clip.samples[lead + i] += sigma * noise(rng);

  const double peak = clip.peak();
  if (peak > 0.0) {
    for (double& s : clip.samples) s *= options.output_peak / peak;
  }
  return clip;
}

}  // namespace spiro
