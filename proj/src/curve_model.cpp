#include "spiro/curve_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spiro/error.hpp"

namespace spiro {

double HillDecay::operator()(double tau) const {
  if (tau <= 0.0) return peak_flow_lps;
  return peak_flow_lps / (1.0 + std::pow(tau / half_decay_s, steepness));
}

double HillDecay::time_to_fraction(double fraction) const {
  return half_decay_s * std::pow(1.0 / fraction - 1.0, 1.0 / steepness);
}

Peak find_peak(const FlowCurve& curve) {
  if (curve.empty()) throw Error(ErrorCode::EmptyCurve, "flow curve is empty");
  Peak p;
  p.flow_lps = curve.flows_lps.front();
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve.flows_lps[i] > p.flow_lps) {
      p.flow_lps = curve.flows_lps[i];
      p.index = i;
    }
  }
  p.time_s = curve.times_s[p.index];
  return p;
}

namespace {

// Coefficients of sum_k beta_k ((t - m)/s)^k as a polynomial in t.
Cubic expand_scaled(const std::array<double, 4>& beta, double m, double s) {
  // (t - m)^k / s^k, expanded with binomial coefficients.
  std::array<double, 4> c{};
  for (int k = 0; k <= 3; ++k) {
    const double scale = beta[k] / std::pow(s, k);
    double binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      // term: binom(k, j) t^j (-m)^(k-j)
      c[j] += scale * binom * std::pow(-m, k - j);
      binom = binom * (k - j) / (j + 1);
    }
  }
  return {c[3], c[2], c[1], c[0]};
}

double rms_residual(const Cubic& cubic, std::span<const double> t, std::span<const double> q) {
  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = cubic(t[i]) - q[i];
    ss += r * r;
  }
  return t.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(t.size()));
}

}  // namespace

RiseFit fit_rise(std::span<const double> times_s, std::span<const double> flows_lps,
                 std::optional<Anchor> anchor) {
  if (times_s.size() != flows_lps.size()) throw Error(ErrorCode::InvalidParams, "length mismatch");
  const std::size_t n = times_s.size();
  if (n == 0) throw Error(ErrorCode::EmptyCurve, "no rise points");

  RiseFit fit;
  if (n == 1) {
    fit.kind = RiseKind::Degenerate;
    fit.cubic.d = anchor ? anchor->flow_lps : flows_lps.front();
    fit.residual_rms = rms_residual(fit.cubic, times_s, flows_lps);
    return fit;
  }
  fit.kind = n >= 4 ? RiseKind::Cubic : RiseKind::Linear;
  const int degree = fit.kind == RiseKind::Cubic ? 3 : 1;

  const auto [tmin, tmax] = std::minmax_element(times_s.begin(), times_s.end());
  const double m = 0.5 * (*tmin + *tmax);
  const double s = std::max(0.5 * (*tmax - *tmin), 1e-12);

  const int first_col = anchor ? 1 : 0;
  const int cols = degree + 1 - first_col;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), cols);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  const double ua = anchor ? (anchor->time_s - m) / s : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (times_s[i] - m) / s;
    const auto row = static_cast<Eigen::Index>(i);
    for (int k = first_col; k <= degree; ++k) {
      design(row, k - first_col) = std::pow(u, k) - (anchor ? std::pow(ua, k) : 0.0);
    }
    rhs(row) = flows_lps[i] - (anchor ? anchor->flow_lps : 0.0);
  }
  const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);

  std::array<double, 4> beta{};
  for (int k = first_col; k <= degree; ++k) beta[k] = sol(k - first_col);
  if (anchor) {
    beta[0] = anchor->flow_lps;
    for (int k = 1; k <= degree; ++k) beta[0] -= beta[k] * std::pow(ua, k);
  }
  fit.cubic = expand_scaled(beta, m, s);
  fit.residual_rms = rms_residual(fit.cubic, times_s, flows_lps);
  return fit;
}

DecayFit fit_decay(std::span<const double> times_s, std::span<const double> flows_lps,
                   double t_peak_s, double peak_flow_lps, const DecayOptions& options) {
  if (times_s.size() != flows_lps.size()) throw Error(ErrorCode::InvalidParams, "length mismatch");
  std::vector<double> tau, q;
  for (std::size_t i = 0; i < times_s.size(); ++i) {
    if (times_s[i] >= t_peak_s) {
      tau.push_back(times_s[i] - t_peak_s);
      q.push_back(flows_lps[i]);
    }
  }
  if (tau.size() < 3) throw Error(ErrorCode::InsufficientData, "need three points after the peak");
  if (!(peak_flow_lps > 0.0)) throw Error(ErrorCode::InvalidParams, "peak flow must be positive");

  // Half-decay time read from the data; fall back to inverting the initial
  // model at the last sample if the data never reaches half of the peak.
  double b0 = -1.0;
  for (std::size_t i = 1; i < tau.size(); ++i) {
    if (q[i] <= 0.5 * peak_flow_lps) {
      const double w = (q[i - 1] - 0.5 * peak_flow_lps) / (q[i - 1] - q[i]);
      b0 = tau[i - 1] + std::clamp(w, 0.0, 1.0) * (tau[i] - tau[i - 1]);
      break;
    }
  }
  if (!(b0 > 0.0)) {
    const double ratio = peak_flow_lps / std::max(q.back(), 1e-12) - 1.0;
    b0 = ratio > 1e-6 ? tau.back() / std::pow(ratio, 1.0 / options.initial_steepness)
                      : 2.0 * tau.back();
  }
  b0 = std::max(b0, 1e-3);

  // Parameters live in log space so positivity holds throughout.
  Eigen::Vector3d theta(std::log(options.initial_steepness), std::log(b0), std::log(peak_flow_lps));
  const std::size_t n = tau.size();

  auto residuals = [&](const Eigen::Vector3d& th, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const double a = std::exp(th(0)), b = std::exp(th(1)), c = std::exp(th(2));
    r.resize(static_cast<Eigen::Index>(n));
    if (jac) jac->resize(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double x = tau[i] / b;
      const double pw = x > 0.0 ? std::pow(x, a) : 0.0;
      const double lg = x > 0.0 ? std::log(x) : 0.0;
      const double denom = 1.0 + pw;
      const double f = c / denom;
      r(row) = f - q[i];
      if (jac) {
        (*jac)(row, 0) = -c * pw * lg * a / (denom * denom);
        (*jac)(row, 1) = c * a * pw / (denom * denom);
        (*jac)(row, 2) = f;
      }
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(theta, r, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d grad = jac.transpose() * r;
    if (grad.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, cost)) {
      converged = true;
      break;
    }
    bool stepped = false;
    while (lambda < 1e12) {
      Eigen::Matrix3d damped = jtj;
      for (int k = 0; k < 3; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::Vector3d step = damped.ldlt().solve(-grad);
      const Eigen::Vector3d trial = theta + step;
      Eigen::VectorXd r_trial;
      residuals(trial, r_trial, nullptr);
      const double trial_cost = r_trial.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        theta = trial;
        const double prev_cost = cost;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        residuals(theta, r, &jac);
        stepped = true;
        if (step.cwiseAbs().maxCoeff() < options.parameter_tolerance ||
            prev_cost - cost <= 1e-15 * prev_cost) {
          converged = true;
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped) {
      // No descent direction left at any damping: the current point is a
      // minimum to machine precision.
      converged = true;
    }
    if (converged) {
      ++iter;
      break;
    }
  }

  const double a = std::exp(theta(0)), b = std::exp(theta(1)), c = std::exp(theta(2));
  if (!converged || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    throw Error(ErrorCode::FitDiverged,
                "decay fit did not converge in " + std::to_string(options.max_iterations) + " iterations");
  }
  DecayFit fit;
  fit.hill = {a, b, c};
  fit.residual_rms = std::sqrt(cost / static_cast<double>(n));
  fit.iterations = iter;
  return fit;
}

double ManeuverFit::flow_at(double t) const {
  if (t < t0_s) return 0.0;
  if (t < t_first_s) return std::max(0.0, linear_slope_lps_per_s * (t - t0_s));
  if (t <= t_peak_s) return std::max(0.0, cubic(t));
  return hill(t - t_peak_s);
}

ManeuverFit fit_maneuver(const FlowCurve& curve, const DecayOptions& options) {
  validate(curve);
  const Peak peak = find_peak(curve);
  if (!(peak.flow_lps > 0.0)) throw Error(ErrorCode::NoTrace, "flow curve has no positive flow");

  ManeuverFit fit;
  fit.quality_flags = curve.quality_flags;
  fit.t_peak_s = peak.time_s;
  fit.observed_peak_lps = peak.flow_lps;
  fit.t_first_s = curve.times_s.front();

  const std::span<const double> times(curve.times_s);
  const std::span<const double> flows(curve.flows_lps);
  const auto decay = fit_decay(times.subspan(peak.index), flows.subspan(peak.index), peak.time_s,
                               peak.flow_lps, options);
  fit.hill = decay.hill;
  fit.decay_residual_rms = decay.residual_rms;
  fit.decay_iterations = decay.iterations;

  const auto rise = fit_rise(times.first(peak.index + 1), flows.first(peak.index + 1),
                             Anchor{peak.time_s, fit.hill.peak_flow_lps});
  fit.cubic = rise.cubic;
  fit.rise_kind = rise.kind;
  fit.rise_residual_rms = rise.residual_rms;
  if (rise.kind == RiseKind::Linear) fit.quality_flags.insert(QualityFlag::RiseLinearFallback);
  if (rise.kind == RiseKind::Degenerate) fit.quality_flags.insert(QualityFlag::RiseDegenerate);

  // Start of exhalation: follow the rise tangent at the first point down to
  // zero flow, looking back no further than the lookback limit or t = 0.
  const double q_first = std::max(0.0, fit.cubic(fit.t_first_s));
  const double slope = fit.cubic.derivative(fit.t_first_s);
  const double earliest = std::max(0.0, fit.t_first_s - kMaxOriginLookbackSeconds);
  double t0 = fit.t_first_s - kMaxOriginLookbackSeconds;
  if (rise.kind != RiseKind::Degenerate && slope > 0.0 && std::isfinite(slope)) {
    t0 = fit.t_first_s - q_first / slope;
  }
  fit.t0_s = std::clamp(t0, std::min(earliest, fit.t_first_s), fit.t_first_s);
  fit.linear_slope_lps_per_s =
      fit.t_first_s > fit.t0_s ? q_first / (fit.t_first_s - fit.t0_s) : 0.0;

  fit.origin_gap_lps = std::abs(fit.linear_slope_lps_per_s * (fit.t_first_s - fit.t0_s) - q_first);
  fit.peak_gap_lps = std::abs(fit.cubic(fit.t_peak_s) - fit.hill(0.0));

  fit.t_end_s = fit.t_peak_s + fit.hill.time_to_fraction(kTailFraction);
  if (fit.t_end_s - fit.t0_s > kMaxManeuverSeconds) {
    fit.t_end_s = fit.t0_s + kMaxManeuverSeconds;
    fit.quality_flags.insert(QualityFlag::TailCapped);
  }

  fit.decision_log = {
      "decay model: F = c*b^a/((t - t_peak)^a + b^a), F(t_peak) = c, F(t_peak + b) = c/2",
      "rise: least-squares cubic anchored to the fitted peak flow at t_peak",
      "origin: linear from t0 (rise tangent at first point, lookback <= 0.5 s) to the first point",
      "tail: extrapolated until flow <= 0.5% of peak, capped at 15 s",
  };
  return fit;
}

FlowCurve extrapolate(const ManeuverFit& fit, double dt_s) {
  if (!(dt_s > 0.0)) throw Error(ErrorCode::InvalidParams, "grid step must be positive");
  const double rise_span = fit.t_peak_s - fit.t0_s;
  double h = dt_s;
  if (rise_span > 0.0) h = rise_span / std::ceil(rise_span / dt_s - 1e-9);
  const auto steps = static_cast<std::size_t>(std::ceil((fit.t_end_s - fit.t0_s) / h - 1e-9));

  FlowCurve curve;
  curve.quality_flags = fit.quality_flags;
  curve.times_s.reserve(steps + 1);
  curve.flows_lps.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = fit.t0_s + static_cast<double>(i) * h;
    curve.times_s.push_back(t);
    curve.flows_lps.push_back(fit.flow_at(t));
  }
  return curve;
}

}  // namespace spiro
