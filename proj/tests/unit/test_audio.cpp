#include <doctest.h>

#include <cstring>

#include "../support.hpp"
#include "spiro/audio.hpp"
#include "spiro/error.hpp"

using namespace spiro;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

// Hand-rolled PCM16 writer, independent of encode_wav.
std::vector<std::uint8_t> pcm16_wav(const std::vector<std::int16_t>& interleaved, int channels, int rate,
                                    bool extra_chunk = false) {
  std::vector<std::uint8_t> b;
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put_u32(b, 36 + data_bytes + (extra_chunk ? 12 : 0));
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, static_cast<std::uint16_t>(channels));
  put_u32(b, static_cast<std::uint32_t>(rate));
  put_u32(b, static_cast<std::uint32_t>(rate * channels * 2));
  put_u16(b, static_cast<std::uint16_t>(channels * 2));
  put_u16(b, 16);
  if (extra_chunk) {
    b.insert(b.end(), {'L', 'I', 'S', 'T'});
    put_u32(b, 4);
    b.insert(b.end(), {'x', 'y', 'z', 'w'});
  }
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put_u32(b, data_bytes);
  for (auto s : interleaved) put_u16(b, static_cast<std::uint16_t>(s));
  return b;
}

std::vector<std::int16_t> ramp16(std::size_t n) {
  std::vector<std::int16_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::int16_t>((static_cast<int>(i * 37) % 65536) - 32768);
  return v;
}

}  // namespace

TEST_CASE("decode one second of mono PCM16") {
  const auto bytes = pcm16_wav(ramp16(44100), 1, 44100);
  const AudioClip clip = decode_wav(bytes);
  CHECK(clip.samples.size() == 44100);
  CHECK(clip.sample_rate_hz == 44100);
  CHECK(clip.samples[0] == doctest::Approx(-1.0));
}

TEST_CASE("stereo with identical channels equals either channel") {
  const auto mono = ramp16(1000);
  std::vector<std::int16_t> stereo;
  for (auto s : mono) stereo.insert(stereo.end(), {s, s});
  const AudioClip a = decode_wav(pcm16_wav(mono, 1, 22050));
  const AudioClip b = decode_wav(pcm16_wav(stereo, 2, 22050));
  CHECK(a.samples == b.samples);
}

TEST_CASE("stereo is averaged per sample") {
  const AudioClip clip = decode_wav(pcm16_wav({16384, 0, -8192, 8192}, 2, 8000));
  REQUIRE(clip.samples.size() == 2);
  CHECK(clip.samples[0] == doctest::Approx(0.25));
  CHECK(clip.samples[1] == doctest::Approx(0.0));
}

TEST_CASE("unknown chunks before data are skipped") {
  const auto clip = decode_wav(pcm16_wav(ramp16(64), 1, 8000, true));
  CHECK(clip.samples.size() == 64);
}

TEST_CASE("corrupted RIFF magic is MalformedFile") {
  auto bytes = pcm16_wav(ramp16(100), 1, 44100);
  bytes[0] = 'X';
  try {
    decode_wav(bytes);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedFile);
  }
}

TEST_CASE("truncated header and unsupported formats are rejected") {
  const auto bytes = pcm16_wav(ramp16(100), 1, 44100);
  CHECK_THROWS_AS(decode_wav(std::span(bytes).first(20)), Error);
  auto eight_bit = bytes;
  eight_bit[34] = 8;  // bits per sample
  try {
    decode_wav(eight_bit);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedEncoding);
  }
}

TEST_CASE("sample rate outside the supported range is rejected") {
  CHECK_THROWS_AS(decode_wav(pcm16_wav(ramp16(100), 1, 4000)), Error);
}

TEST_CASE("decode(encode(x)) is bit exact for PCM16 sources") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(-32768, 32767);
    std::vector<std::int16_t> raw(257 + seed * 31);
    for (auto& s : raw) s = static_cast<std::int16_t>(dist(rng));
    const AudioClip clip = decode_wav(pcm16_wav(raw, 1, 44100));
    const AudioClip again = decode_wav(encode_wav(clip, WavEncoding::Pcm16));
    REQUIRE(again.samples.size() == clip.samples.size());
    CHECK(std::memcmp(again.samples.data(), clip.samples.data(), clip.samples.size() * sizeof(double)) == 0);
    CHECK(encode_wav(clip, WavEncoding::Pcm16) == pcm16_wav(raw, 1, 44100));
  }
}

TEST_CASE("float32 round trip matches to float precision") {
  const AudioClip clip = test::tone(440.0, 0.1, 48000, 0.7);
  const AudioClip again = decode_wav(encode_wav(clip, WavEncoding::Float32));
  CHECK(again.sample_rate_hz == 48000);
  REQUIRE(again.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    CHECK(again.samples[i] == doctest::Approx(clip.samples[i]).epsilon(1e-6));
  }
}

TEST_CASE("normalize scales the peak to one") {
  AudioClip clip = test::tone(300.0, 0.05, 8000, 0.5);
  const AudioClip out = normalize(clip);
  CHECK(out.peak() == doctest::Approx(1.0));
  for (std::size_t i = 0; i < clip.samples.size(); ++i) CHECK(out.samples[i] == doctest::Approx(2.0 * clip.samples[i]));
}

TEST_CASE("normalize is the identity at peak one and idempotent") {
  AudioClip clip;
  clip.sample_rate_hz = 8000;
  clip.samples = {0.25, -1.0, 0.5, 0.0};
  CHECK(normalize(clip).samples == clip.samples);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AudioClip noisy = test::noise_clip(0.01, seed, 8000);
    const AudioClip once = normalize(noisy);
    CHECK(normalize(once).samples == once.samples);
  }
}

TEST_CASE("normalize flags all-zero clips as silent") {
  AudioClip clip;
  clip.sample_rate_hz = 8000;
  clip.samples.assign(100, 0.0);
  const AudioClip out = normalize(clip);
  CHECK(out.silent);
  CHECK(out.samples == clip.samples);
}

namespace {

// Block RMS scan oracle: first and last index of 20 ms blocks above -40 dB.
std::pair<std::size_t, std::size_t> loud_span(const AudioClip& clip, std::size_t block) {
  const double peak = clip.peak();
  std::size_t first = clip.samples.size(), last = 0;
  for (std::size_t start = 0; start < clip.samples.size(); start += block) {
    const std::size_t end = std::min(start + block, clip.samples.size());
    double acc = 0.0;
    for (std::size_t i = start; i < end; ++i) acc += clip.samples[i] * clip.samples[i];
    const double rms = std::sqrt(acc / static_cast<double>(end - start));
    if (20.0 * std::log10(rms / peak) >= -40.0) {
      first = std::min(first, start);
      last = end;
    }
  }
  return {first, last};
}

}  // namespace

TEST_CASE("trim keeps the tone span within one analysis window") {
  const int fs = 44100;
  AudioClip clip;
  clip.sample_rate_hz = fs;
  clip.samples.assign(fs / 2, 0.0);
  const AudioClip t = test::tone(1000.0, 1.0, fs);
  clip.samples.insert(clip.samples.end(), t.samples.begin(), t.samples.end());
  clip.samples.insert(clip.samples.end(), fs / 2, 0.0);

  const AudioClip out = trim_silence(clip, {-40.0, 0.020});
  const std::size_t window = static_cast<std::size_t>(0.020 * fs);
  CHECK(std::abs(static_cast<double>(out.samples.size()) - fs) <= window);

  const auto [first, last] = loud_span(clip, window);
  CHECK(out.samples.size() == last - first);
  CHECK(out.samples.front() == clip.samples[first]);
}

TEST_CASE("trim never drops a loud block") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AudioClip clip;
    clip.sample_rate_hz = 8000;
    const auto n = static_cast<std::size_t>(2000 + u(rng) * 6000);
    clip.samples.assign(n, 0.0);
    // A few bursts at random positions and levels.
    for (int b = 0; b < 3; ++b) {
      const auto at = static_cast<std::size_t>(u(rng) * (n - 400));
      const double amp = std::pow(10.0, -3.0 * u(rng));
      for (std::size_t i = 0; i < 300; ++i) clip.samples[at + i] += amp * std::sin(0.3 * static_cast<double>(i));
    }
    const std::size_t block = 160;
    const auto [first, last] = loud_span(clip, block);
    const AudioClip out = trim_silence(clip, {-40.0, 0.020});
    CHECK(out.samples.size() >= last - first);
  }
}

TEST_CASE("clip without silence is returned unchanged") {
  const AudioClip clip = test::tone(500.0, 0.5, 8000);
  CHECK(trim_silence(clip).samples == clip.samples);
}

TEST_CASE("all-silence clip cannot be trimmed") {
  AudioClip clip;
  clip.sample_rate_hz = 8000;
  clip.samples.assign(8000, 0.0);
  try {
    trim_silence(clip);
    FAIL("expected EmptyAfterTrim");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyAfterTrim);
  }
}

TEST_CASE("validate rejects non-finite samples and bad rates") {
  AudioClip clip = test::tone(100.0, 0.01, 8000);
  CHECK_NOTHROW(validate(clip));
  clip.samples[3] = std::nan("");
  CHECK_THROWS_AS(validate(clip), Error);
  clip = test::tone(100.0, 0.01, 8000);
  clip.sample_rate_hz = 1000;
  CHECK_THROWS_AS(validate(clip), Error);
}

TEST_CASE("wav files round trip through disk") {
  test::TempDir dir;
  const AudioClip clip = normalize(test::tone(700.0, 0.2, 16000, 0.5));
  write_wav_file(dir / "a.wav", clip, WavEncoding::Pcm16);
  const AudioClip back = read_wav_file(dir / "a.wav");
  CHECK(back.sample_rate_hz == 16000);
  REQUIRE(back.samples.size() == clip.samples.size());
  CHECK(back.samples[100] == doctest::Approx(clip.samples[100]).epsilon(1e-4));
  CHECK_THROWS_AS(read_wav_file(dir / "missing.wav"), Error);
}
