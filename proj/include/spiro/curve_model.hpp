#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spiro/flow_curve.hpp"

namespace spiro {

// F(t) = a t^3 + b t^2 + c t + d, t in seconds of the recording timeline.
struct Cubic {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  double operator()(double t) const { return ((a * t + b) * t + c) * t + d; }
  double derivative(double t) const { return (3.0 * a * t + 2.0 * b) * t + c; }
};

// Decaying Hill function of the time since the peak:
//   F(tau) = c * b^a / (tau^a + b^a)
// F(0) = c, F(b) = c / 2, strictly decreasing for tau > 0.
struct HillDecay {
  double steepness = 2.0;     // a
  double half_decay_s = 1.0;  // b
  double peak_flow_lps = 1.0; // c

  double operator()(double tau) const;
  // Time after the peak at which F falls to `fraction` of c.
  double time_to_fraction(double fraction) const;
};

struct Peak {
  std::size_t index = 0;
  double time_s = 0.0;
  double flow_lps = 0.0;
};

// Maximum flow, earliest index on ties.
Peak find_peak(const FlowCurve& curve);

enum class RiseKind { Cubic, Linear, Degenerate };

struct RiseFit {
  Cubic cubic;
  RiseKind kind = RiseKind::Cubic;
  double residual_rms = 0.0;
};

struct Anchor {
  double time_s = 0.0;
  double flow_lps = 0.0;
};

// Least-squares cubic over the rise. Two or three points fall back to a line
// (a = b = 0); one point yields a constant and kind Degenerate. With an
// anchor, the fitted curve passes exactly through it.
RiseFit fit_rise(std::span<const double> times_s, std::span<const double> flows_lps,
                 std::optional<Anchor> anchor = std::nullopt);

struct DecayOptions {
  int max_iterations = 200;
  double parameter_tolerance = 1e-8;
  double initial_steepness = 2.0;
};

struct DecayFit {
  HillDecay hill;
  double residual_rms = 0.0;
  int iterations = 0;
};

// Levenberg-Marquardt fit of the Hill decay to samples at t >= t_peak.
// Needs at least three points (InsufficientData); throws FitDiverged if the
// optimizer does not converge within the iteration budget.
DecayFit fit_decay(std::span<const double> times_s, std::span<const double> flows_lps,
                   double t_peak_s, double peak_flow_lps, const DecayOptions& options = {});

inline constexpr double kTailFraction = 0.005;
inline constexpr double kMaxManeuverSeconds = 15.0;
inline constexpr double kMaxOriginLookbackSeconds = 0.5;

struct ManeuverFit {
  double t0_s = 0.0;        // extrapolated start of exhalation
  double t_first_s = 0.0;   // first observed point
  double linear_slope_lps_per_s = 0.0;
  Cubic cubic;
  RiseKind rise_kind = RiseKind::Cubic;
  HillDecay hill;
  double t_peak_s = 0.0;
  double t_end_s = 0.0;
  double observed_peak_lps = 0.0;
  double rise_residual_rms = 0.0;
  double decay_residual_rms = 0.0;
  int decay_iterations = 0;
  double origin_gap_lps = 0.0;  // |line(t_first) - rise(t_first)|
  double peak_gap_lps = 0.0;    // |rise(t_peak) - hill(0)|
  QualityFlags quality_flags;
  std::vector<std::string> decision_log;

  double flow_at(double t) const;
};

// Splits at the peak, fits the decay, then fits the rise anchored to the
// decay's peak value so both junctions are continuous.
ManeuverFit fit_maneuver(const FlowCurve& curve, const DecayOptions& options = {});

// Uniform grid from t0 to the first node at or past t_end. The step is the
// largest value <= dt_s that puts t_peak exactly on a node.
FlowCurve extrapolate(const ManeuverFit& fit, double dt_s);

}  // namespace spiro
