#include <httplib.h>

#include "spiro/error.hpp"
#include "spiro/json_io.hpp"
#include "spiro/service.hpp"

namespace spiro {

using nlohmann::json;

namespace {

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  res.status = status;
  res.set_content(error_json(code, message).dump(), "application/json");
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::BadAudio:
    case ErrorCode::UnknownCalibration: return 422;
    case ErrorCode::Io: return 500;
    default: return 400;
  }
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, status_for(e.code()), e.code_name(), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal_error", e.what());
  }
}

}  // namespace

void register_routes(httplib::Server& server, TrialStore& store) {
  server.Post("/v1/trials", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.is_multipart_form_data()) {
        return send_error(res, 400, "bad_request", "expected multipart/form-data");
      }
      for (const char* field : {"subject_id", "calibration_id", "audio"}) {
        if (!req.has_file(field)) return send_error(res, 400, "bad_request", std::string("missing field ") + field);
      }
      const auto audio = req.get_file_value("audio").content;
      const auto id = store.submit_trial(
          req.get_file_value("subject_id").content,
          std::span(reinterpret_cast<const std::uint8_t*>(audio.data()), audio.size()),
          req.get_file_value("calibration_id").content);
      res.status = 201;
      res.set_header("Location", "/v1/trials/" + id);
      res.set_content(json{{"trial_id", id}}.dump(), "application/json");
    });
  });

  server.Get(R"(/v1/trials/([^/]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { res.set_content(store.get_report(req.matches[1]), "application/json"); });
  });

  server.Get(R"(/v1/subjects/([^/]+)/trials)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json list = json::array();
      for (const auto& s : store.list_trials(req.matches[1])) list.push_back(to_json(s));
      res.set_content(list.dump(), "application/json");
    });
  });

  server.Post("/v1/calibrations", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) return send_error(res, 400, "parse_error", "body is not valid JSON");
      CalibrationModel model = calibration_from_json(body);
      if (model.created_at.empty()) model.created_at = utc_timestamp();
      store.calibrations().put(model);
      res.status = 201;
      res.set_content(json{{"calibration_id", model.device_profile_id}}.dump(), "application/json");
    });
  });
}

}  // namespace spiro
