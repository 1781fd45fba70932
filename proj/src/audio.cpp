#include "spiro/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>

#include "spiro/error.hpp"

namespace spiro {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) |
         (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t off, const char* tag) {
  return std::memcmp(b.data() + off, tag, 4) == 0;
}

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

}  // namespace

double AudioClip::peak() const {
  double p = 0.0;
  for (double s : samples) p = std::max(p, std::abs(s));
  return p;
}

void validate(const AudioClip& clip) {
  if (clip.samples.empty()) throw Error(ErrorCode::InvalidClip, "clip has no samples");
  if (clip.sample_rate_hz < kMinSampleRate || clip.sample_rate_hz > kMaxSampleRate) {
    throw Error(ErrorCode::InvalidClip,
                "sample rate " + std::to_string(clip.sample_rate_hz) + " Hz out of range");
  }
  for (double s : clip.samples) {
    if (!std::isfinite(s)) throw Error(ErrorCode::InvalidClip, "clip has non-finite sample");
  }
}

AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::MalformedFile, "missing RIFF/WAVE header");
  }

  std::optional<FormatChunk> fmt;
  std::optional<std::span<const std::uint8_t>> data;

  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, off + 4);
    const std::size_t body = off + 8;
    if (size > bytes.size() - body) {
      // Some writers leave the data size unset when streaming; accept a
      // truncated trailing data chunk.
      if (!tag_is(bytes, off, "data")) throw Error(ErrorCode::MalformedFile, "chunk overruns file");
      data = bytes.subspan(body);
      break;
    }
    if (tag_is(bytes, off, "fmt ")) {
      if (size < 16) throw Error(ErrorCode::MalformedFile, "fmt chunk too short");
      FormatChunk f;
      f.format = read_u16(bytes, body);
      f.channels = read_u16(bytes, body + 2);
      f.sample_rate = read_u32(bytes, body + 4);
      f.block_align = read_u16(bytes, body + 12);
      f.bits = read_u16(bytes, body + 14);
      if (f.format == kFormatExtensible) {
        if (size < 40) throw Error(ErrorCode::MalformedFile, "extensible fmt chunk too short");
        // First two bytes of the sub-format GUID carry the actual format tag.
        f.format = read_u16(bytes, body + 24);
      }
      fmt = f;
    } else if (tag_is(bytes, off, "data")) {
      data = bytes.subspan(body, size);
    }
    off = body + size + (size & 1u);
  }

  if (!fmt) throw Error(ErrorCode::MalformedFile, "missing fmt chunk");
  if (!data) throw Error(ErrorCode::MalformedFile, "missing data chunk");

  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool float32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::UnsupportedEncoding,
                "unsupported encoding (format " + std::to_string(fmt->format) + ", " +
                    std::to_string(fmt->bits) + " bits)");
  }
  if (fmt->channels < 1 || fmt->channels > 2) {
    throw Error(ErrorCode::UnsupportedEncoding,
                std::to_string(fmt->channels) + " channels not supported");
  }
  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  if (fmt->block_align != frame_bytes) throw Error(ErrorCode::MalformedFile, "inconsistent block align");

  const std::size_t frames = data->size() / frame_bytes;
  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(fmt->sample_rate);
  clip.source_id = std::move(source_id);
  clip.samples.resize(frames);

  auto sample_at = [&](std::size_t pos) -> double {
    if (pcm16) {
      const auto v = static_cast<std::int16_t>(read_u16(*data, pos));
      return static_cast<double>(v) / 32768.0;
    }
    const std::uint32_t bits = read_u32(*data, pos);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return static_cast<double>(f);
  };

  for (std::size_t i = 0; i < frames; ++i) {
    const std::size_t base = i * frame_bytes;
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) acc += sample_at(base + c * bytes_per_sample);
    clip.samples[i] = acc / fmt->channels;
  }

  validate(clip);
  return clip;
}

AudioClip read_wav_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding) {
  validate(clip);
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);

  for (double s : clip.samples) {
    if (encoding == WavEncoding::Pcm16) {
      const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      const float f = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put_u32(out, u);
    }
  }
  return out;
}

void write_wav_file(const std::string& path, const AudioClip& clip, WavEncoding encoding) {
  const auto bytes = encode_wav(clip, encoding);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioClip normalize(const AudioClip& clip) {
  validate(clip);
  AudioClip out = clip;
  const double p = clip.peak();
  if (p == 0.0) {
    out.silent = true;
    return out;
  }
  if (p == 1.0) return out;
  for (double& s : out.samples) s /= p;
  return out;
}

std::vector<double> block_rms_db(const AudioClip& clip, std::size_t block_len) {
  const double peak = clip.peak();
  std::vector<double> out;
  if (block_len == 0) return out;
  for (std::size_t start = 0; start < clip.samples.size(); start += block_len) {
    const std::size_t end = std::min(start + block_len, clip.samples.size());
    double sum = 0.0;
    for (std::size_t i = start; i < end; ++i) sum += clip.samples[i] * clip.samples[i];
    const double rms = std::sqrt(sum / static_cast<double>(end - start));
    out.push_back(peak > 0.0 && rms > 0.0 ? 20.0 * std::log10(rms / peak)
                                          : -std::numeric_limits<double>::infinity());
  }
  return out;
}

AudioClip trim_silence(const AudioClip& clip, const TrimOptions& options) {
  validate(clip);
  if (!(options.threshold_db < 0.0)) {
    throw Error(ErrorCode::InvalidParams, "trim threshold must be negative dB");
  }
  const auto block_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(options.window_s * clip.sample_rate_hz)));
  const auto levels = block_rms_db(clip, block_len);

  auto loud = [&](double db) { return db >= options.threshold_db; };
  const auto first = std::find_if(levels.begin(), levels.end(), loud);
  if (first == levels.end()) throw Error(ErrorCode::EmptyAfterTrim, "entire clip below threshold");
  const auto last = std::find_if(levels.rbegin(), levels.rend(), loud);

  const std::size_t begin = static_cast<std::size_t>(first - levels.begin()) * block_len;
  const std::size_t end = std::min(
      clip.samples.size(), (static_cast<std::size_t>(levels.rend() - last)) * block_len);

  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.source_id = clip.source_id;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

}  // namespace spiro
