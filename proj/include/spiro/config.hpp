#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "spiro/trace.hpp"

namespace spiro {

struct Settings {
  AnalysisConfig analysis;
  std::uint64_t seed = 1;
};

using KeyValues = std::map<std::string, std::string>;

// key = value per line; '#' starts a comment, [sections] are ignored, values
// may be quoted. Throws Parse on malformed lines.
KeyValues parse_key_values(const std::string& text);
KeyValues read_config_file(const std::string& path);

// Applies one setting. Keys accept either dashes or underscores
// (loudness-floor-db == loudness_floor_db). Throws Parse on unknown keys or
// bad values, InvalidParams on out-of-range values.
void apply_setting(Settings& settings, const std::string& key, const std::string& value);
void apply_settings(Settings& settings, const KeyValues& values);

void validate(const Settings& settings);

}  // namespace spiro
