#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "../support.hpp"
#include "spiro/error.hpp"
#include "spiro/synth.hpp"
#include "spiro/trace.hpp"

using namespace spiro;

namespace {

FrequencyTrace make_trace(std::vector<double> t, std::vector<double> f) {
  FrequencyTrace tr;
  tr.times_s = std::move(t);
  tr.freqs_hz = std::move(f);
  tr.confidence_db.assign(tr.times_s.size(), -10.0);
  return tr;
}

FrequencyTrace random_trace(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<std::size_t>(3 + u(rng) * 60);
  FrequencyTrace tr;
  double t = u(rng) * 0.5;
  for (std::size_t i = 0; i < n; ++i) {
    t += 0.002 + u(rng) * 0.03;
    tr.times_s.push_back(t);
    tr.freqs_hz.push_back(300.0 + u(rng) * 3000.0);
    tr.confidence_db.push_back(-40.0 * u(rng));
  }
  return tr;
}

void expect_no_trace(const auto& fn) {
  try {
    fn();
    FAIL("expected NoTrace");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTrace);
  }
}

}  // namespace

TEST_CASE("linear chirp trace is within one bin of the construction") {
  const double f0 = 600.0, f1 = 2600.0, secs = 2.0;
  const Spectrogram spec = stft(test::linear_chirp(f0, f1, secs));
  const FrequencyTrace tr = extract_trace(spec);
  REQUIRE(tr.size() > 100);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double truth = f0 + (f1 - f0) * tr.times_s[i] / secs;
    CHECK(std::abs(tr.freqs_hz[i] - truth) <= spec.bin_width_hz());
  }
}

TEST_CASE("silence has no trace") {
  AudioClip clip;
  clip.samples.assign(44100, 0.0);
  expect_no_trace([&] { extract_trace(stft(clip)); });
  expect_no_trace([&] { analyze_frequency(clip); });
}

TEST_CASE("tone at 20 dB SNR stays within one bin") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    AudioClip clip = test::tone(1700.0, 1.0);
    // Sine power 1/2; noise variance for 20 dB SNR.
    const auto noise = test::gaussian_noise(clip.samples.size(), seed, std::sqrt(0.5 / 100.0));
    for (std::size_t i = 0; i < noise.size(); ++i) clip.samples[i] += noise[i];
    const Spectrogram spec = stft(clip);
    const FrequencyTrace tr = extract_trace(spec);
    CHECK(tr.size() >= spec.n_frames - 5);
    for (double f : tr.freqs_hz) CHECK(std::abs(f - 1700.0) <= spec.bin_width_hz());
  }
}

TEST_CASE("white noise yields no trace") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AudioClip clip = test::noise_clip(2.0, 1000 + seed);
    expect_no_trace([&] { extract_trace(stft(clip)); });
    expect_no_trace([&] { analyze_frequency(clip); });
  }
}

TEST_CASE("smoothing is a centered moving average that shrinks symmetrically") {
  const auto tr = make_trace({0, 1, 2, 3, 4, 5}, {1, 2, 3, 4, 5, 12});
  const auto s = smooth_trace(tr, 5);
  CHECK(s.freqs_hz[0] == doctest::Approx(1.0));
  CHECK(s.freqs_hz[1] == doctest::Approx(2.0));
  CHECK(s.freqs_hz[2] == doctest::Approx(3.0));
  CHECK(s.freqs_hz[3] == doctest::Approx(5.2));
  CHECK(s.freqs_hz[4] == doctest::Approx(7.0));
  CHECK(s.freqs_hz[5] == doctest::Approx(12.0));
  CHECK(smooth_trace(tr, 1).freqs_hz == tr.freqs_hz);
}

TEST_CASE("smoothing preserves linear trends exactly") {
  std::vector<double> t, f;
  for (int i = 0; i < 40; ++i) t.push_back(0.01 * i), f.push_back(300.0 + 17.0 * i);
  const auto s = smooth_trace(make_trace(t, f), 5);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(s.freqs_hz[i] == doctest::Approx(f[i]));
}

TEST_CASE("fusing identical traces gives the smoothed input") {
  std::mt19937_64 rng(3);
  const auto tr = random_trace(rng);
  const auto fused = fuse_traces(tr, tr, 5);
  const auto smooth = smooth_trace(tr, 5);
  CHECK(fused.times_s == smooth.times_s);
  for (std::size_t i = 0; i < fused.size(); ++i) CHECK(fused.freqs_hz[i] == doctest::Approx(smooth.freqs_hz[i]));
}

TEST_CASE("fusing with a trace 100 Hz higher gives the smoothed lower one") {
  std::mt19937_64 rng(4);
  const auto a = random_trace(rng);
  auto b = a;
  for (double& f : b.freqs_hz) f += 100.0;
  const auto fused = fuse_traces(a, b, 5);
  const auto smooth = smooth_trace(a, 5);
  for (std::size_t i = 0; i < fused.size(); ++i) CHECK(fused.freqs_hz[i] == doctest::Approx(smooth.freqs_hz[i]));
}

TEST_CASE("offset grids fuse onto the union within the overlap") {
  const auto a = make_trace({0.0, 0.1, 0.2, 0.3, 0.4}, {1000, 1000, 1000, 1000, 1000});
  const auto b = make_trace({0.05, 0.15, 0.25, 0.35, 0.45}, {900, 900, 900, 900, 900});
  const auto fused = fuse_traces(a, b, 1);
  const std::vector<double> expect{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4};
  CHECK(fused.times_s == expect);
  for (double f : fused.freqs_hz) CHECK(f == 900.0);
}

TEST_CASE("disjoint traces fuse to nothing") {
  const auto a = make_trace({0.0, 0.1}, {1, 2});
  const auto b = make_trace({0.2, 0.3}, {1, 2});
  CHECK(fuse_traces(a, b, 1).empty());
}

TEST_CASE("fusion is commutative and dominated by both inputs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_trace(rng);
    const auto b = random_trace(rng);
    const std::size_t w = 1 + trial % 7;
    const auto ab = fuse_traces(a, b, w);
    const auto ba = fuse_traces(b, a, w);
    CHECK(ab.times_s == ba.times_s);
    CHECK(ab.freqs_hz == ba.freqs_hz);
    CHECK(ab.confidence_db == ba.confidence_db);
    const auto sa = smooth_trace(a, w), sb = smooth_trace(b, w);
    for (std::size_t i = 0; i < ab.size(); ++i) {
      CHECK(ab.freqs_hz[i] <= interpolate_frequency(sa, ab.times_s[i]) + 1e-9);
      CHECK(ab.freqs_hz[i] <= interpolate_frequency(sb, ab.times_s[i]) + 1e-9);
    }
  }
}

TEST_CASE("pure tone analyzes to a constant trace") {
  const FrequencyAnalysis fa = analyze_frequency(test::tone(1000.0, 1.0));
  const double bin = 44100.0 / 2048.0;
  for (double f : fa.trace.freqs_hz) CHECK(std::abs(f - 1000.0) <= bin);
  CHECK(fa.filter.low_cut_hz < 1000.0);
  CHECK(fa.filter.high_cut_hz > 1000.0);
  CHECK(std::abs(fa.psd_peak_hz - 1000.0) <= bin);
}

TEST_CASE("synthetic whistle: fused trace within one bin of the ground truth") {
  const FlowProfile flow(6.0, 0.5, 3.0, 1.0, 4.0);
  CalibrationModel cal;
  cal.slope = 400.0;
  cal.intercept = 200.0;
  const SynthOptions opts;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SynthOptions o = opts;
    o.seed = seed;
    const AudioClip clip = synthesize_whistle({flow, cal, 30.0, AmplitudeModel::ProportionalToFlow}, o);
    const FrequencyAnalysis fa = analyze_frequency(clip);
    REQUIRE(fa.trace.size() > 100);
    const double bin = 44100.0 / 2048.0;
    for (std::size_t i = 0; i < fa.trace.size(); ++i) {
      const double truth = cal.frequency_for(flow.flow_at(fa.trace.times_s[i] - o.lead_silence_s));
      CHECK(std::abs(fa.trace.freqs_hz[i] - truth) <= bin);
    }
  }
}

TEST_CASE("analysis is deterministic") {
  const FlowProfile flow(8.0, 0.1, 3.0, 0.8, 6.0);
  CalibrationModel cal;
  cal.slope = 400.0;
  cal.intercept = 200.0;
  const AudioClip clip = synthesize_whistle({flow, cal, 30.0, AmplitudeModel::ProportionalToFlow});
  const auto a = analyze_frequency(clip).trace;
  const auto b = analyze_frequency(clip).trace;
  CHECK(a.times_s == b.times_s);
  CHECK(a.freqs_hz == b.freqs_hz);
  CHECK(a.confidence_db == b.confidence_db);
}

TEST_CASE("trace csv") {
  const auto tr = make_trace({0.5, 0.6}, {1000.25, 1010.5});
  std::ostringstream out;
  write_trace_csv(out, tr);
  CHECK(out.str() == "time_s,freq_hz,confidence_db\n0.5,1000.25,-10\n0.6,1010.5,-10\n");
}
