#include "spiro/filter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "spiro/error.hpp"

namespace spiro {

namespace {

using cplx = std::complex<double>;

std::vector<double> poly_mul(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> out(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) out[i + j] += p[i] * q[j];
  return out;
}

std::array<cplx, 2> quadratic_roots(double a1, double a2) {
  // z^2 + a1 z + a2 = 0
  const cplx disc = std::sqrt(cplx(a1 * a1 - 4.0 * a2, 0.0));
  return {(-a1 + disc) / 2.0, (-a1 - disc) / 2.0};
}

}  // namespace

std::complex<double> BandpassSpec::response(double freq_hz) const {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const auto& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

std::vector<std::complex<double>> BandpassSpec::poles() const {
  std::vector<cplx> out;
  for (const auto& s : sections) {
    const auto r = quadratic_roots(s.a1, s.a2);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

bool BandpassSpec::is_stable() const {
  const auto p = poles();
  return std::all_of(p.begin(), p.end(), [](cplx z) { return std::abs(z) < 1.0; });
}

std::size_t BandpassSpec::settling_samples() const {
  double r = 0.0;
  for (cplx p : poles()) r = std::max(r, std::abs(p));
  if (r <= 0.0) return 1;
  if (r >= 1.0) return static_cast<std::size_t>(sample_rate_hz);
  return static_cast<std::size_t>(std::ceil(std::log(1e-3) / std::log(r)));
}

BandpassSpec design_bandpass(double fmin_hz, double fmax_hz, int sample_rate_hz,
                             double margin_fraction) {
  if (sample_rate_hz <= 0) throw Error(ErrorCode::InvalidBand, "sample rate must be positive");
  if (!(margin_fraction >= 0.0 && margin_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidBand, "margin must be in [0, 1)");
  }
  if (!(fmin_hz < fmax_hz)) {
    throw Error(ErrorCode::InvalidBand, "band edges cross: fmin " + std::to_string(fmin_hz) +
                                            " >= fmax " + std::to_string(fmax_hz));
  }
  const double fs = sample_rate_hz;
  const double low = fmin_hz * (1.0 - margin_fraction);
  const double high = fmax_hz * (1.0 + margin_fraction);
  if (!(low > 0.0 && high < fs / 2.0)) {
    throw Error(ErrorCode::InvalidBand, "band [" + std::to_string(low) + ", " +
                                            std::to_string(high) + "] Hz outside (0, Nyquist)");
  }

  // Prewarp so the -3 dB points land exactly on the requested edges.
  const double two_fs = 2.0 * fs;
  const double w_low = two_fs * std::tan(std::numbers::pi * low / fs);
  const double w_high = two_fs * std::tan(std::numbers::pi * high / fs);
  const double bw = w_high - w_low;
  const double w0_sq = w_low * w_high;

  // Second-order Butterworth prototype poles, upper half plane member of each
  // conjugate pair is enough: the other pair member maps to the conjugates.
  const cplx proto = std::polar(1.0, 3.0 * std::numbers::pi / 4.0);
  const cplx half = proto * bw / 2.0;
  const cplx root = std::sqrt(half * half - w0_sq);
  const std::array<cplx, 2> analog = {half + root, half - root};

  // Analog gain bw^2, two zeros at s = 0; bilinear transform maps them to
  // z = +1 and the two zeros at infinity to z = -1.
  cplx denom = 1.0;
  std::vector<cplx> digital;
  for (cplx s : analog) {
    digital.push_back((two_fs + s) / (two_fs - s));
    denom *= (two_fs - s) * (two_fs - std::conj(s));
  }
  const double gain = (bw * bw * two_fs * two_fs / denom).real();
  const double section_gain = std::sqrt(std::abs(gain));

  BandpassSpec spec;
  spec.low_cut_hz = low;
  spec.high_cut_hz = high;
  spec.sample_rate_hz = sample_rate_hz;
  for (std::size_t i = 0; i < digital.size(); ++i) {
    Biquad s;
    const double g = (i == 0 && gain < 0.0) ? -section_gain : section_gain;
    s.b0 = g;
    s.b1 = 0.0;
    s.b2 = -g;
    s.a1 = -2.0 * digital[i].real();
    s.a2 = std::norm(digital[i]);
    spec.sections.push_back(s);
  }
  spec.b = {1.0};
  spec.a = {1.0};
  for (const auto& s : spec.sections) {
    spec.b = poly_mul(spec.b, {s.b0, s.b1, s.b2});
    spec.a = poly_mul(spec.a, {1.0, s.a1, s.a2});
  }
  return spec;
}

std::vector<double> filter_forward(const BandpassSpec& spec, const std::vector<double>& x) {
  std::vector<double> y = x;
  for (const auto& s : spec.sections) {
    // Direct form II transposed.
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

AudioClip apply_filter(const AudioClip& clip, const BandpassSpec& spec) {
  validate(clip);
  if (spec.sample_rate_hz != clip.sample_rate_hz) {
    throw Error(ErrorCode::RateMismatch,
                "filter designed for " + std::to_string(spec.sample_rate_hz) + " Hz, clip is " +
                    std::to_string(clip.sample_rate_hz) + " Hz");
  }
  const auto& x = clip.samples;
  const std::size_t n = x.size();
  const std::size_t pad = std::min(3 * spec.settling_samples(), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);

  auto y = filter_forward(spec, ext);
  std::reverse(y.begin(), y.end());
  y = filter_forward(spec, y);
  std::reverse(y.begin(), y.end());

  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.source_id = clip.source_id;
  out.samples.assign(y.begin() + static_cast<std::ptrdiff_t>(pad),
                     y.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return out;
}

}  // namespace spiro
