#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spiro {

inline constexpr int kMinSampleRate = 8000;
inline constexpr int kMaxSampleRate = 192000;

// Mono PCM clip. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 44100;
  std::string source_id;
  // Set by normalize() when the clip is all-zero.
  bool silent = false;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  double peak() const;
};

// Throws Error{InvalidClip} if the clip violates the type invariants.
void validate(const AudioClip& clip);

enum class WavEncoding { Pcm16, Float32 };

// RIFF/WAVE, PCM16 or IEEE float32, 1-2 channels. Stereo is averaged to mono.
AudioClip decode_wav(std::span<const std::uint8_t> bytes,
                     std::string source_id = {});
AudioClip read_wav_file(const std::string& path);

// PCM16 quantization is round(x * 32768) clamped to int16, so decode∘encode
// is the identity for clips that came from PCM16.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip,
                                     WavEncoding encoding = WavEncoding::Pcm16);
void write_wav_file(const std::string& path, const AudioClip& clip,
                    WavEncoding encoding = WavEncoding::Pcm16);

AudioClip normalize(const AudioClip& clip);

struct TrimOptions {
  double threshold_db = -40.0;
  double window_s = 0.020;
};

// Drops leading and trailing RMS blocks quieter than threshold_db relative to
// the clip peak. Interior samples are never touched.
AudioClip trim_silence(const AudioClip& clip, const TrimOptions& options = {});

// Per-block RMS level in dB relative to the clip peak; one entry per block of
// `block_len` samples (the final block may be shorter).
std::vector<double> block_rms_db(const AudioClip& clip, std::size_t block_len);

}  // namespace spiro
