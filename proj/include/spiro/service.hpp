#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spiro/calibration.hpp"
#include "spiro/trace.hpp"

namespace httplib {
class Server;
}

namespace spiro {

// Calibration profiles stored as <dir>/<device_profile_id>.json.
class CalibrationRegistry {
 public:
  explicit CalibrationRegistry(std::filesystem::path dir);

  std::optional<CalibrationModel> find(const std::string& id) const;
  void put(const CalibrationModel& model);

 private:
  std::filesystem::path dir_;
};

struct TrialSummary {
  std::string trial_id;
  std::string subject_id;
  std::string received_at;
  std::uint64_t sequence = 0;
  std::string status;
  std::string calibration_id;
  std::optional<double> peak_frequency_hz;
  std::optional<std::string> error_code;
  bool best = false;
};

nlohmann::json to_json(const TrialSummary& summary);

// File-backed trial store: <root>/subjects/<subject>/<trial>.json + .wav and
// <root>/calibrations. Records are immutable once they leave "pending"; a
// restart rebuilds the index from disk.
class TrialStore {
 public:
  explicit TrialStore(std::filesystem::path root, AnalysisConfig config = {});

  CalibrationRegistry& calibrations() { return calibrations_; }

  // Input errors are thrown before anything is written. Analysis failures
  // are recorded as status "error".
  std::string submit_trial(const std::string& subject_id, std::span<const std::uint8_t> wav,
                           const std::string& calibration_id);

  // Stored record bytes; repeated reads return identical bytes. Throws NotFound.
  std::string get_report(const std::string& trial_id) const;

  // Newest first. Among done trials the highest peak frequency is marked
  // best, earliest on ties.
  std::vector<TrialSummary> list_trials(const std::string& subject_id) const;

  std::size_t size() const;

 private:
  std::filesystem::path record_path(const std::string& subject, const std::string& trial) const;
  std::mutex& subject_mutex(const std::string& subject);
  void load_index();
  std::string next_trial_id(std::uint64_t sequence) const;

  std::filesystem::path root_;
  AnalysisConfig config_;
  CalibrationRegistry calibrations_;

  mutable std::shared_mutex index_mutex_;
  std::map<std::string, std::string> trial_subject_;
  std::map<std::string, std::vector<TrialSummary>> subjects_;

  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> subject_locks_;
  std::atomic<std::uint64_t> sequence_{0};
};

bool valid_identifier(const std::string& id);

// POST /v1/trials, GET /v1/trials/{id}, GET /v1/subjects/{id}/trials,
// POST /v1/calibrations.
void register_routes(httplib::Server& server, TrialStore& store);

}  // namespace spiro
