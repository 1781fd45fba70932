#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "spiro/audio.hpp"
#include "spiro/calibration.hpp"
#include "spiro/cli.hpp"
#include "spiro/config.hpp"
#include "spiro/error.hpp"
#include "spiro/filter.hpp"
#include "spiro/json_io.hpp"
#include "spiro/pipeline.hpp"
#include "spiro/report.hpp"
#include "spiro/service.hpp"
#include "spiro/spectral.hpp"
#include "spiro/synth.hpp"

namespace py = pybind11;
using namespace spiro;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw Error(ErrorCode::InvalidParams, "expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

AudioClip make_clip(const Array& samples, int sample_rate_hz) {
  AudioClip clip;
  clip.samples = to_vector(samples);
  clip.sample_rate_hz = sample_rate_hz;
  validate(clip);
  return clip;
}

// Keyword settings use the same names as the config file.
AnalysisConfig make_config(const py::kwargs& kwargs) {
  Settings s;
  for (const auto& [k, v] : kwargs) apply_setting(s, k.cast<std::string>(), py::str(v).cast<std::string>());
  validate(s);
  return s.analysis;
}

FlowCurve make_curve(const Array& times, const Array& flows) {
  FlowCurve c;
  c.times_s = to_vector(times);
  c.flows_lps = to_vector(flows);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Acoustic spirometry: whistle audio to flow, volume and lung function parameters.";

  py::exception<Error>(m, "SpiroError", PyExc_RuntimeError);
  // Raised with a `code` attribute holding the snake_case error code.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = py::module_::import("spiro._core").attr("SpiroError");
      const py::object exc = type(py::str(e.what()));
      exc.attr("code") = std::string(e.code_name());
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def("read_wav", [](const std::string& path) {
    const AudioClip clip = read_wav_file(path);
    return py::make_tuple(to_array(clip.samples), clip.sample_rate_hz);
  }, py::arg("path"), "Decode a WAV file to (mono float samples, sample rate).");

  m.def("write_wav", [](const std::string& path, const Array& samples, int sample_rate_hz, const std::string& encoding) {
    write_wav_file(path, make_clip(samples, sample_rate_hz),
                   encoding == "float32" ? WavEncoding::Float32 : WavEncoding::Pcm16);
  }, py::arg("path"), py::arg("samples"), py::arg("sample_rate_hz") = 44100, py::arg("encoding") = "pcm16");

  m.def("stft", [](const Array& samples, int sample_rate_hz, std::size_t window, std::size_t hop) {
    const Spectrogram spec = stft(make_clip(samples, sample_rate_hz), {window, hop, WindowKind::Hann});
    py::array_t<double> mags({spec.n_frames, spec.n_bins});
    std::copy(spec.magnitudes.begin(), spec.magnitudes.end(), mags.mutable_data());
    return py::make_tuple(mags, to_array(spec.frame_times_s), to_array(spec.bin_freqs_hz));
  }, py::arg("samples"), py::arg("sample_rate_hz") = 44100, py::arg("window") = 2048, py::arg("hop") = 512,
     "Hann STFT magnitudes as (frames x bins, frame centre times, bin frequencies).");

  m.def("design_bandpass", [](double fmin, double fmax, int fs) { return to_py(to_json(design_bandpass(fmin, fmax, fs))); },
        py::arg("fmin_hz"), py::arg("fmax_hz"), py::arg("sample_rate_hz"));

  m.def("frequency_trace", [](const Array& samples, int sample_rate_hz, const py::kwargs& kwargs) {
    const AnalysisConfig config = make_config(kwargs);
    const AudioClip clip = make_clip(samples, sample_rate_hz);
    FrequencyAnalysis a;
    {
      py::gil_scoped_release release;
      a = analyze_frequency(clip, config);
    }
    return py::make_tuple(to_array(a.trace.times_s), to_array(a.trace.freqs_hz));
  }, py::arg("samples"), py::arg("sample_rate_hz") = 44100, "Fused dominant-frequency trace (times, Hz).");

  m.def("fit_calibration", [](const Array& flows, const Array& freqs, const std::string& device_id) {
    const auto q = to_vector(flows), f = to_vector(freqs);
    if (q.size() != f.size()) throw Error(ErrorCode::InvalidParams, "flows and frequencies differ in length");
    std::vector<CalibrationPoint> pts;
    for (std::size_t i = 0; i < q.size(); ++i) pts.push_back({q[i], f[i]});
    CalibrationModel model = fit_calibration(pts, device_id);
    model.created_at = utc_timestamp();
    return to_py(to_json(model));
  }, py::arg("flows_lps"), py::arg("freqs_hz"), py::arg("device_profile_id") = "default");

  m.def("analyze", [](const Array& samples, int sample_rate_hz, const py::dict& calibration, const py::kwargs& kwargs) {
    const CalibrationModel cal = calibration_from_json(from_py(calibration));
    const AnalysisConfig config = make_config(kwargs);
    const AudioClip clip = normalize(make_clip(samples, sample_rate_hz));
    nlohmann::json report;
    {
      py::gil_scoped_release release;
      report = to_json(measure(clip, cal, config).report);
    }
    return to_py(report);
  }, py::arg("samples"), py::arg("sample_rate_hz"), py::arg("calibration"),
     "Full pipeline on one clip; returns the report as a dict. Keyword settings match the config file keys.");

  m.def("compute_report", [](const Array& times, const Array& flows, const std::string& calibration_id) {
    return to_py(to_json(compute_report(make_curve(times, flows), calibration_id)));
  }, py::arg("times_s"), py::arg("flows_lps"), py::arg("calibration_id") = "");

  m.def("integrate_volume", [](const Array& times, const Array& flows, double t0, double t1) {
    return integrate_volume(make_curve(times, flows), t0, t1);
  }, py::arg("times_s"), py::arg("flows_lps"), py::arg("t_from"), py::arg("t_to"));

  m.def("fev1_fvc_ratio", &fev1_fvc_ratio, py::arg("fev1_l"), py::arg("fvc_l"));

  m.def("select_best_trial", [](const std::vector<double>& peaks) { return select_best_trial(peaks); },
        py::arg("peak_frequencies_hz"));

  m.def("synthesize", [](double pefr, double t_peak, double steepness, double half_decay, double duration,
                         double slope, double intercept, double snr_db, int sample_rate_hz, std::uint64_t seed,
                         const std::string& amplitude) {
    CalibrationModel cal;
    cal.slope = slope;
    cal.intercept = intercept;
    SynthProfile profile{reference_flow_profile(pefr, t_peak, steepness, half_decay, duration), cal, snr_db,
                         parse_amplitude_model(amplitude)};
    SynthOptions opt;
    opt.sample_rate_hz = sample_rate_hz;
    opt.seed = seed;
    const AudioClip clip = synthesize_whistle(profile, opt);
    py::dict truth;
    truth["fvc_l"] = profile.flow.fvc_l();
    truth["fev1_l"] = profile.flow.fev1_l();
    truth["pefr_lps"] = pefr;
    truth["lead_silence_s"] = opt.lead_silence_s;
    return py::make_tuple(to_array(clip.samples), truth);
  }, py::arg("pefr_lps") = 8.0, py::arg("t_peak_s") = 0.1, py::arg("steepness") = 3.0, py::arg("half_decay_s") = 0.8,
     py::arg("duration_s") = 6.0, py::arg("slope") = 400.0, py::arg("intercept") = 200.0, py::arg("snr_db") = 30.0,
     py::arg("sample_rate_hz") = 44100, py::arg("seed") = 1, py::arg("amplitude") = "proportional",
     "Whistle for a known maneuver; returns (samples, ground truth dict).");

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "spiro");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    py::gil_scoped_release release;
    return cli::run(static_cast<int>(argv.size()), argv.data());
  }, py::arg("args"), "Run the command-line tool in-process; returns its exit code.");

  py::class_<TrialStore>(m, "TrialStore")
      .def(py::init([](const std::string& root) { return std::make_unique<TrialStore>(root); }), py::arg("root"))
      .def("put_calibration", [](TrialStore& s, const py::dict& cal) {
        CalibrationModel model = calibration_from_json(from_py(cal));
        if (model.created_at.empty()) model.created_at = utc_timestamp();
        s.calibrations().put(model);
      }, py::arg("calibration"))
      .def("submit_trial", [](TrialStore& s, const std::string& subject, const py::bytes& wav, const std::string& cal) {
        const std::string raw = wav;
        py::gil_scoped_release release;
        return s.submit_trial(subject, std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()), cal);
      }, py::arg("subject_id"), py::arg("wav"), py::arg("calibration_id"))
      .def("get_report", [](const TrialStore& s, const std::string& id) { return py::bytes(s.get_report(id)); },
           py::arg("trial_id"), "Stored record bytes (JSON).")
      .def("list_trials", [](const TrialStore& s, const std::string& subject) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& t : s.list_trials(subject)) out.push_back(to_json(t));
        return to_py(out);
      }, py::arg("subject_id"))
      .def("__len__", &TrialStore::size);
}
