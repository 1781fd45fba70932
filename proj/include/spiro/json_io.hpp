#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "spiro/calibration.hpp"
#include "spiro/curve_model.hpp"
#include "spiro/error.hpp"
#include "spiro/filter.hpp"
#include "spiro/report.hpp"

namespace spiro {

inline constexpr int kReportSchemaVersion = 1;

std::string utc_timestamp();

nlohmann::json to_json(const CalibrationModel& model);
CalibrationModel calibration_from_json(const nlohmann::json& j);

// Throws CalibrationNotFound when the file is missing, Parse when malformed.
CalibrationModel load_calibration(const std::string& path);
void save_calibration(const std::string& path, const CalibrationModel& model);

nlohmann::json to_json(const BandpassSpec& spec);
nlohmann::json to_json(const ManeuverFit& fit);
nlohmann::json to_json(const SpirometryReport& report);
nlohmann::json to_json(const QualityFlags& flags);

nlohmann::json error_json(std::string_view code, std::string_view message);
inline nlohmann::json error_json(const Error& e) { return error_json(e.code_name(), e.what()); }

// Writes via a temporary file and rename so readers never see partial files.
void write_text_atomic(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);

}  // namespace spiro
