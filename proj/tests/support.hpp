#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "spiro/audio.hpp"
#include "spiro/flow_curve.hpp"

namespace spiro::test {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline AudioClip tone(double freq_hz, double seconds, int fs = 44100, double amp = 1.0, double phase = 0.0) {
  AudioClip clip;
  clip.sample_rate_hz = fs;
  const auto n = static_cast<std::size_t>(std::lround(seconds * fs));
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) clip.samples[i] = amp * std::sin(kTwoPi * freq_hz * i / fs + phase);
  return clip;
}

// f(t) = f0 + (f1 - f0) t / T, phase integrated analytically.
inline AudioClip linear_chirp(double f0, double f1, double seconds, int fs = 44100) {
  AudioClip clip;
  clip.sample_rate_hz = fs;
  const auto n = static_cast<std::size_t>(std::lround(seconds * fs));
  const double k = (f1 - f0) / seconds;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    clip.samples[i] = std::sin(kTwoPi * (f0 * t + 0.5 * k * t * t));
  }
  return clip;
}

inline std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline AudioClip noise_clip(double seconds, std::uint64_t seed, int fs = 44100) {
  AudioClip clip;
  clip.sample_rate_hz = fs;
  clip.samples = gaussian_noise(static_cast<std::size_t>(std::lround(seconds * fs)), seed, 0.3);
  return clip;
}

// Textbook O(N^2) DFT of a real sequence, bins 0..N/2.
inline std::vector<double> naive_dft_magnitudes(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> mags(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * std::polar(1.0, -kTwoPi * k * i / n);
    mags[k] = std::abs(acc);
  }
  return mags;
}

// Flow falling linearly from a at t = 0 to b at t = 1 s, then to 0 at t = 2 s,
// with a and b chosen so that FEV1 and FVC come out as requested. Kinks sit
// on even nodes, so composite Simpson integrates it exactly.
inline FlowCurve two_ramp_curve(double fev1_l, double fvc_l, double step_s = 0.001) {
  const double b = 2.0 * (fvc_l - fev1_l);
  const double a = 2.0 * fev1_l - b;
  const auto n = static_cast<std::size_t>(std::lround(2.0 / step_s));
  FlowCurve c;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * step_s;
    c.times_s.push_back(t);
    c.flows_lps.push_back(t <= 1.0 ? a + (b - a) * t : b * (2.0 - t));
  }
  return c;
}

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("spiro_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace spiro::test
