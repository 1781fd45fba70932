#include "spiro/service.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "spiro/audio.hpp"
#include "spiro/error.hpp"
#include "spiro/json_io.hpp"
#include "spiro/pipeline.hpp"

namespace spiro {

namespace fs = std::filesystem;
using nlohmann::json;

bool valid_identifier(const std::string& id) {
  if (id.empty() || id.size() > 64 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

CalibrationRegistry::CalibrationRegistry(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::optional<CalibrationModel> CalibrationRegistry::find(const std::string& id) const {
  if (!valid_identifier(id)) return std::nullopt;
  const auto path = dir_ / (id + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return load_calibration(path.string());
}

void CalibrationRegistry::put(const CalibrationModel& model) {
  if (!valid_identifier(model.device_profile_id)) {
    throw Error(ErrorCode::InvalidParams, "invalid device_profile_id: " + model.device_profile_id);
  }
  save_calibration((dir_ / (model.device_profile_id + ".json")).string(), model);
}

json to_json(const TrialSummary& s) {
  json j{{"trial_id", s.trial_id},
         {"subject_id", s.subject_id},
         {"received_at", s.received_at},
         {"status", s.status},
         {"calibration_id", s.calibration_id},
         {"best", s.best}};
  j["peak_frequency_hz"] = s.peak_frequency_hz ? json(*s.peak_frequency_hz) : json();
  if (s.error_code) j["error_code"] = *s.error_code;
  return j;
}

namespace {

TrialSummary summary_from_record(const json& r) {
  TrialSummary s;
  s.trial_id = r.at("trial_id").get<std::string>();
  s.subject_id = r.at("subject_id").get<std::string>();
  s.received_at = r.at("received_at").get<std::string>();
  s.sequence = r.at("sequence").get<std::uint64_t>();
  s.status = r.at("status").get<std::string>();
  s.calibration_id = r.at("calibration_id").get<std::string>();
  if (r.contains("peak_frequency_hz") && r["peak_frequency_hz"].is_number()) {
    s.peak_frequency_hz = r["peak_frequency_hz"].get<double>();
  }
  if (r.contains("error")) s.error_code = r["error"].at("code").get<std::string>();
  return s;
}

}  // namespace

TrialStore::TrialStore(fs::path root, AnalysisConfig config)
    : root_(std::move(root)), config_(config), calibrations_(root_ / "calibrations") {
  fs::create_directories(root_ / "subjects");
  load_index();
}

fs::path TrialStore::record_path(const std::string& subject, const std::string& trial) const {
  return root_ / "subjects" / subject / (trial + ".json");
}

std::mutex& TrialStore::subject_mutex(const std::string& subject) {
  std::lock_guard lock(locks_mutex_);
  auto& slot = subject_locks_[subject];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void TrialStore::load_index() {
  std::uint64_t next = 0;
  for (const auto& subject_dir : fs::directory_iterator(root_ / "subjects")) {
    if (!subject_dir.is_directory()) continue;
    for (const auto& entry : fs::directory_iterator(subject_dir.path())) {
      if (entry.path().extension() != ".json") continue;
      json record = json::parse(read_text(entry.path().string()), nullptr, false);
      // Leftover temp files and torn writes are skipped, not fatal.
      if (record.is_discarded() || !record.is_object() || !record.contains("trial_id")) continue;
      TrialSummary s = summary_from_record(record);
      next = std::max(next, s.sequence + 1);
      trial_subject_[s.trial_id] = s.subject_id;
      subjects_[s.subject_id].push_back(std::move(s));
    }
  }
  sequence_ = next;
}

std::string TrialStore::next_trial_id(std::uint64_t sequence) const {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[40];
  std::snprintf(buf, sizeof buf, "tr_%08llx%012llx", static_cast<unsigned long long>(sequence),
                static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
  return buf;
}

std::string TrialStore::submit_trial(const std::string& subject_id, std::span<const std::uint8_t> wav,
                                     const std::string& calibration_id) {
  if (!valid_identifier(subject_id)) throw Error(ErrorCode::InvalidParams, "invalid subject_id");
  auto calibration = calibrations_.find(calibration_id);
  if (!calibration) throw Error(ErrorCode::UnknownCalibration, "unknown calibration: " + calibration_id);

  AudioClip clip;
  try {
    clip = normalize(decode_wav(wav, subject_id));
  } catch (const Error& e) {
    throw Error(ErrorCode::BadAudio, e.what());
  }

  std::lock_guard write_lock(subject_mutex(subject_id));
  const std::uint64_t sequence = sequence_.fetch_add(1);
  const std::string trial_id = next_trial_id(sequence);
  const fs::path dir = root_ / "subjects" / subject_id;
  fs::create_directories(dir);

  const std::string audio_ref = "subjects/" + subject_id + "/" + trial_id + ".wav";
  write_text_atomic((root_ / audio_ref).string(),
                    std::string_view(reinterpret_cast<const char*>(wav.data()), wav.size()));

  json record{{"trial_id", trial_id},
              {"subject_id", subject_id},
              {"received_at", utc_timestamp()},
              {"sequence", sequence},
              {"calibration_id", calibration_id},
              {"audio_ref", audio_ref},
              {"status", "pending"}};
  const std::string path = record_path(subject_id, trial_id).string();
  write_text_atomic(path, record.dump(2) + "\n");
  {
    std::unique_lock lock(index_mutex_);
    trial_subject_[trial_id] = subject_id;
    subjects_[subject_id].push_back(summary_from_record(record));
  }

  // Analysis runs inside the request; the pending record exists only so an
  // asynchronous variant would not change the schema.
  try {
    const Measurement m = measure(clip, *calibration, config_);
    record["status"] = "done";
    record["peak_frequency_hz"] = m.analysis.trace.peak_frequency_hz();
    record["report"] = to_json(m.report);
  } catch (const Error& e) {
    record["status"] = "error";
    record["error"] = {{"code", e.code_name()}, {"message", e.what()}};
  }
  write_text_atomic(path, record.dump(2) + "\n");

  std::unique_lock lock(index_mutex_);
  for (auto& s : subjects_[subject_id]) {
    if (s.trial_id == trial_id) s = summary_from_record(record);
  }
  return trial_id;
}

std::string TrialStore::get_report(const std::string& trial_id) const {
  std::string subject;
  {
    std::shared_lock lock(index_mutex_);
    auto it = trial_subject_.find(trial_id);
    if (it == trial_subject_.end()) throw Error(ErrorCode::NotFound, "unknown trial: " + trial_id);
    subject = it->second;
  }
  return read_text(record_path(subject, trial_id).string());
}

std::vector<TrialSummary> TrialStore::list_trials(const std::string& subject_id) const {
  std::vector<TrialSummary> out;
  {
    std::shared_lock lock(index_mutex_);
    auto it = subjects_.find(subject_id);
    if (it == subjects_.end()) return out;
    out = it->second;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sequence < b.sequence; });

  std::vector<double> peaks;
  std::vector<std::size_t> done;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].status == "done" && out[i].peak_frequency_hz) {
      peaks.push_back(*out[i].peak_frequency_hz);
      done.push_back(i);
    }
  }
  if (!peaks.empty()) out[done[select_best_trial(peaks)]].best = true;
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t TrialStore::size() const {
  std::shared_lock lock(index_mutex_);
  return trial_subject_.size();
}

}  // namespace spiro
