#include "spiro/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "spiro/error.hpp"
#include "spiro/json_io.hpp"

namespace spiro {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string canonical_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::Parse, key + ": not a number: " + value);
  return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::Parse, key + ": not a non-negative integer: " + value);
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Parse, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw Error(ErrorCode::Parse, "config line " + std::to_string(line_no) + ": empty key");
    out[canonical_key(key)] = value;
  }
  return out;
}

KeyValues read_config_file(const std::string& path) { return parse_key_values(read_text(path)); }

void apply_setting(Settings& s, const std::string& raw_key, const std::string& value) {
  const std::string key = canonical_key(raw_key);
  auto& a = s.analysis;
  if (key == "window") {
    a.stft.window_len = static_cast<std::size_t>(to_unsigned(key, value));
  } else if (key == "hop") {
    a.stft.hop = to_unsigned(key, value);
  } else if (key == "window_kind") {
    a.stft.window = parse_window_kind(value);
  } else if (key == "rolloff_fraction") {
    a.gate.rolloff_fraction = to_double(key, value);
  } else if (key == "loudness_floor_db") {
    a.gate.loudness_floor_db = to_double(key, value);
  } else if (key == "max_spread_fraction") {
    a.gate.max_spread_fraction = to_double(key, value);
  } else if (key == "smooth_window") {
    a.smooth_window = to_unsigned(key, value);
  } else if (key == "band_margin") {
    a.band_margin = to_double(key, value);
  } else if (key == "grid_ms") {
    a.grid_ms = to_double(key, value);
  } else if (key == "seed") {
    s.seed = to_unsigned(key, value);
  } else {
    throw Error(ErrorCode::Parse, "unknown config key: " + raw_key);
  }
}

void apply_settings(Settings& settings, const KeyValues& values) {
  for (const auto& [k, v] : values) apply_setting(settings, k, v);
}

void validate(const Settings& s) {
  const auto& a = s.analysis;
  const auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidParams, what); };
  if (a.stft.window_len < 2) bad("window must be at least 2 samples");
  if (a.stft.hop == 0 || a.stft.hop > a.stft.window_len) bad("hop must be in (0, window]");
  if (!(a.gate.rolloff_fraction > 0.5 && a.gate.rolloff_fraction < 1.0)) bad("rolloff-fraction must be in (0.5, 1)");
  if (!(a.gate.loudness_floor_db < 0.0)) bad("loudness-floor-db must be negative");
  if (!(a.gate.max_spread_fraction > 0.0 && a.gate.max_spread_fraction <= 1.0)) bad("max-spread-fraction must be in (0, 1]");
  if (a.smooth_window == 0) bad("smooth-window must be positive");
  if (!(a.band_margin >= 0.0 && a.band_margin < 1.0)) bad("band-margin must be in [0, 1)");
  if (!(a.grid_ms > 0.0 && a.grid_ms <= 100.0)) bad("grid-ms must be in (0, 100]");
}

}  // namespace spiro
