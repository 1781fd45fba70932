#include "spiro/json_io.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace spiro {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

json to_json(const CalibrationModel& m) {
  return json{{"slope", m.slope},
              {"intercept", m.intercept},
              {"r_squared", m.r_squared},
              {"residual_std_hz", m.residual_std_hz},
              {"flow_range_lps", {m.flow_range_lps.first, m.flow_range_lps.second}},
              {"device_profile_id", m.device_profile_id},
              {"created_at", m.created_at}};
}

CalibrationModel calibration_from_json(const json& j) {
  try {
    CalibrationModel m;
    m.slope = j.at("slope").get<double>();
    m.intercept = j.at("intercept").get<double>();
    m.r_squared = j.value("r_squared", 1.0);
    m.residual_std_hz = j.value("residual_std_hz", 0.0);
    if (j.contains("flow_range_lps")) {
      const auto& r = j.at("flow_range_lps");
      m.flow_range_lps = {r.at(0).get<double>(), r.at(1).get<double>()};
    }
    m.device_profile_id = j.value("device_profile_id", std::string("default"));
    m.created_at = j.value("created_at", std::string());
    if (!(m.slope > 0.0)) throw Error(ErrorCode::Parse, "calibration slope must be positive");
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed calibration: ") + e.what());
  }
}

CalibrationModel load_calibration(const std::string& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::CalibrationNotFound, "calibration file not found: " + path);
  const std::string text = read_text(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Parse, "calibration file is not valid JSON: " + path);
  return calibration_from_json(j);
}

void save_calibration(const std::string& path, const CalibrationModel& model) {
  write_text_atomic(path, to_json(model).dump(2) + "\n");
}

json to_json(const BandpassSpec& spec) {
  json sections = json::array();
  for (const auto& s : spec.sections) sections.push_back({s.b0, s.b1, s.b2, 1.0, s.a1, s.a2});
  return json{{"low_cut_hz", spec.low_cut_hz},
              {"high_cut_hz", spec.high_cut_hz},
              {"order", spec.order},
              {"sample_rate_hz", spec.sample_rate_hz},
              {"b", spec.b},
              {"a", spec.a},
              {"sos", sections}};
}

namespace {
std::string_view rise_kind_name(RiseKind kind) {
  switch (kind) {
    case RiseKind::Cubic: return "cubic";
    case RiseKind::Linear: return "linear";
    case RiseKind::Degenerate: return "degenerate";
  }
  return "cubic";
}
}  // namespace

json to_json(const QualityFlags& flags) {
  json out = json::array();
  for (auto f : flags) out.push_back(std::string(quality_flag_name(f)));
  return out;
}

json to_json(const ManeuverFit& fit) {
  return json{{"t0_s", fit.t0_s},
              {"t_first_s", fit.t_first_s},
              {"linear_slope_lps_per_s", fit.linear_slope_lps_per_s},
              {"cubic", {{"a", fit.cubic.a}, {"b", fit.cubic.b}, {"c", fit.cubic.c}, {"d", fit.cubic.d}}},
              {"rise_kind", rise_kind_name(fit.rise_kind)},
              {"hill",
               {{"a_h", fit.hill.steepness}, {"b_h", fit.hill.half_decay_s}, {"c_h", fit.hill.peak_flow_lps}}},
              {"t_peak_s", fit.t_peak_s},
              {"t_end_s", fit.t_end_s},
              {"observed_peak_lps", fit.observed_peak_lps},
              {"fit_residuals",
               {{"rise_rms_lps", fit.rise_residual_rms},
                {"decay_rms_lps", fit.decay_residual_rms},
                {"decay_iterations", fit.decay_iterations}}},
              {"junction_gaps", {{"origin_lps", fit.origin_gap_lps}, {"peak_lps", fit.peak_gap_lps}}}};
}

json to_json(const SpirometryReport& r) {
  const auto& meta = r.pipeline_metadata;
  json metadata{{"calibration_id", meta.calibration_id},
                {"psd_peak_hz", meta.psd_peak_hz},
                {"trial_peak_frequencies_hz", meta.trial_peak_frequencies_hz},
                {"selected_trial", meta.selected_trial},
                {"decision_log", meta.decision_log}};
  metadata["band"] = meta.band ? json{{"fmin_hz", meta.band->fmin_hz}, {"fmax_hz", meta.band->fmax_hz}} : json();
  metadata["filter"] = meta.filter ? to_json(*meta.filter) : json();
  metadata["fit"] = meta.fit ? to_json(*meta.fit) : json();

  return json{{"schema_version", kReportSchemaVersion},
              {"fvc_l", r.fvc_l},
              {"fev1_l", r.fev1_l},
              {"fev1_fvc_ratio", r.fev1_fvc_ratio},
              {"pefr_lps", r.pefr_lps},
              {"fvc50_ratio", r.fvc50_ratio},
              {"fvc75_ratio", r.fvc75_ratio},
              {"t0_s", r.t0_s},
              {"t_end_s", r.t_end_s},
              {"volume_time", {{"t_s", r.volume_time.t_s}, {"volume_l", r.volume_time.volume_l}}},
              {"flow_volume", {{"volume_l", r.flow_volume.volume_l}, {"flow_lps", r.flow_volume.flow_lps}}},
              {"quality_flags", to_json(r.quality_flags)},
              {"pipeline_metadata", metadata}};
}

json error_json(std::string_view code, std::string_view message) {
  return json{{"error", {{"code", code}, {"message", message}}}};
}

void write_text_atomic(const std::string& path, std::string_view text) {
  std::ostringstream suffix;
  suffix << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
  const std::string tmp = path + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + path);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot move " + tmp + " into place: " + ec.message());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace spiro
