#include "spiro/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "spiro/audio.hpp"
#include "spiro/calibration.hpp"
#include "spiro/config.hpp"
#include "spiro/error.hpp"
#include "spiro/export.hpp"
#include "spiro/json_io.hpp"
#include "spiro/pipeline.hpp"
#include "spiro/service.hpp"
#include "spiro/synth.hpp"

namespace spiro::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Analysis failures exit 3; everything else the user can fix exits 2.
int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoTrace:
    case ErrorCode::NoSignal:
    case ErrorCode::InvalidBand:
    case ErrorCode::InsufficientData:
    case ErrorCode::DegenerateFit:
    case ErrorCode::EmptyCurve:
    case ErrorCode::FitDiverged:
      return kExitAnalysis;
    default:
      return kExitInput;
  }
}

struct Overrides {
  std::optional<std::size_t> window, hop, smooth_window;
  std::optional<double> rolloff_fraction, loudness_floor_db, grid_ms;
  std::optional<std::uint64_t> seed;
  std::string config_path;
};

void add_analysis_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key=value settings file (flags take precedence)");
  cmd->add_option("--window", o.window, "STFT window length in samples [2048]");
  cmd->add_option("--hop", o.hop, "STFT hop in samples [512]");
  cmd->add_option("--rolloff-fraction", o.rolloff_fraction, "spectral rolloff fraction [0.85]");
  cmd->add_option("--loudness-floor-db", o.loudness_floor_db, "frame loudness floor in dB [-35]");
  cmd->add_option("--smooth-window", o.smooth_window, "trace moving-average points [5]");
  cmd->add_option("--grid-ms", o.grid_ms, "resampling grid for volumes in ms [1]");
  cmd->add_option("--seed", o.seed, "random seed [1]; analysis itself is deterministic");
}

// defaults < config file < flags
Settings resolve(const Overrides& o) {
  Settings s;
  if (!o.config_path.empty()) {
    if (!fs::exists(o.config_path)) throw Error(ErrorCode::Io, "config file not found: " + o.config_path);
    apply_settings(s, read_config_file(o.config_path));
  }
  if (o.window) s.analysis.stft.window_len = *o.window;
  if (o.hop) s.analysis.stft.hop = *o.hop;
  if (o.rolloff_fraction) s.analysis.gate.rolloff_fraction = *o.rolloff_fraction;
  if (o.loudness_floor_db) s.analysis.gate.loudness_floor_db = *o.loudness_floor_db;
  if (o.smooth_window) s.analysis.smooth_window = *o.smooth_window;
  if (o.grid_ms) s.analysis.grid_ms = *o.grid_ms;
  if (o.seed) s.seed = *o.seed;
  validate(s);
  return s;
}

void write_file(const fs::path& path, const std::string& text) { write_text_atomic(path.string(), text); }

template <class Writer>
std::string render(Writer&& w) {
  std::ostringstream out;
  w(out);
  return out.str();
}

// Prints the error JSON on stderr and, when a directory is known, writes it
// next to the outputs as error.json.
int fail(const Error& e, const std::optional<fs::path>& out_dir) {
  const std::string text = error_json(e).dump(2) + "\n";
  std::cerr << text;
  if (out_dir) {
    std::error_code ec;
    fs::create_directories(*out_dir, ec);
    if (!ec) {
      try {
        write_file(*out_dir / "error.json", text);
      } catch (const Error&) {
      }
    }
  }
  return exit_code_for(e.code());
}

int cmd_analyze(const std::vector<std::string>& wavs, const std::string& calibration_path,
                const fs::path& out_dir, const Overrides& overrides, bool spectrogram) {
  try {
    const Settings settings = resolve(overrides);
    fs::create_directories(out_dir);
    const CalibrationModel calibration = load_calibration(calibration_path);

    std::vector<AudioClip> clips;
    for (const auto& path : wavs) clips.push_back(normalize(read_wav_file(path)));

    const TrialSet set = measure_trials(clips, calibration, settings.analysis);
    const Measurement& best = set.trials[set.best];

    write_file(out_dir / "report.json", to_json(best.report).dump(2) + "\n");
    write_file(out_dir / "trace.csv", render([&](std::ostream& o) { write_trace_csv(o, best.analysis.trace); }));
    const FlowCurve curve = extrapolate(best.fit, settings.analysis.grid_ms / 1000.0);
    write_file(out_dir / "flow_time.csv", render([&](std::ostream& o) { write_flow_time_csv(o, curve); }));
    write_file(out_dir / "flow_time.svg", svg_flow_time(curve));
    write_file(out_dir / "volume_time.svg", svg_volume_time(best.report));
    write_file(out_dir / "flow_volume.svg", svg_flow_volume(best.report));
    if (set.trials.size() > 1) {
      fs::create_directories(out_dir / "trials");
      for (std::size_t i = 0; i < set.trials.size(); ++i) {
        write_file(out_dir / "trials" / ("trial_" + std::to_string(i) + ".json"),
                   to_json(set.trials[i].report).dump(2) + "\n");
      }
    }
    if (spectrogram) {
      const Spectrogram spec = stft(clips[set.best], settings.analysis.stft);
      write_file(out_dir / "spectrogram.csv", render([&](std::ostream& o) { write_spectrogram_csv(o, spec); }));
    }

    const auto& r = best.report;
    std::cout << "trial " << set.best << ": FVC " << r.fvc_l << " L, FEV1 " << r.fev1_l << " L, FEV1/FVC "
              << r.fev1_fvc_ratio << ", PEFR " << r.pefr_lps << " L/s\n";
    return kExitOk;
  } catch (const Error& e) {
    return fail(e, out_dir);
  } catch (const fs::filesystem_error& e) {
    return fail(Error(ErrorCode::Io, e.what()), std::nullopt);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t\r\"");
    const auto b = cell.find_last_not_of(" \t\r\"");
    cells.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
  }
  return cells;
}

double parse_number(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": not a number: " + s);
  }
}

int cmd_calibrate(const std::string& csv_path, const fs::path& out_path, const std::string& device_id,
                  const Overrides& overrides) {
  try {
    const Settings settings = resolve(overrides);
    std::ifstream in(csv_path);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + csv_path);

    std::string line;
    int line_no = 0;
    int flow_col = -1, value_col = -1;
    bool wav_mode = false;
    std::vector<CalibrationPoint> points;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
      const auto cells = split_csv_line(line);
      if (flow_col < 0) {
        for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
          if (cells[i] == "flow_lps") flow_col = i;
          if (cells[i] == "freq_hz") value_col = i;
          if (cells[i] == "wav_path") value_col = i, wav_mode = true;
        }
        if (flow_col < 0 || value_col < 0) {
          throw Error(ErrorCode::Parse, "header must name flow_lps and freq_hz or wav_path");
        }
        continue;
      }
      if (static_cast<int>(cells.size()) <= std::max(flow_col, value_col)) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": missing columns");
      }
      CalibrationPoint p;
      p.flow_lps = parse_number(cells[flow_col], line_no);
      if (wav_mode) {
        fs::path wav = cells[value_col];
        if (wav.is_relative()) wav = fs::path(csv_path).parent_path() / wav;
        p.freq_hz = median_frequency(normalize(read_wav_file(wav.string())), settings.analysis);
      } else {
        p.freq_hz = parse_number(cells[value_col], line_no);
      }
      points.push_back(p);
    }

    CalibrationModel model = fit_calibration(points, device_id);
    model.created_at = utc_timestamp();
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    save_calibration(out_path.string(), model);
    std::cout << "slope " << model.slope << " Hz/(L/s), intercept " << model.intercept << " Hz, r^2 "
              << model.r_squared << "\n";
    return kExitOk;
  } catch (const Error& e) {
    // A calibration that cannot be fitted is bad input, not a failed analysis.
    const int code = fail(e, std::nullopt);
    return e.code() == ErrorCode::NoTrace ? code : kExitInput;
  } catch (const fs::filesystem_error& e) {
    return fail(Error(ErrorCode::Io, e.what()), std::nullopt);
  }
}

struct SynthArgs {
  double pefr = 8.0, t_peak = 0.1, steepness = 3.0, half_decay = 0.8, duration = 6.0;
  double slope = 400.0, intercept = 200.0, snr_db = 30.0;
  int sample_rate = 44100;
  std::string amplitude = "proportional";
  std::string encoding = "pcm16";
  std::string calibration_out;
  std::string device_id = "synthetic";
};

int cmd_synth(const SynthArgs& a, const fs::path& out_wav, const Overrides& overrides) {
  try {
    const Settings settings = resolve(overrides);
    FlowProfile flow(a.pefr, a.t_peak, a.steepness, a.half_decay, a.duration);
    CalibrationModel cal;
    cal.slope = a.slope;
    cal.intercept = a.intercept;
    cal.r_squared = 1.0;
    cal.flow_range_lps = {0.0, a.pefr};
    cal.device_profile_id = a.device_id;
    SynthProfile profile{flow, cal, a.snr_db, parse_amplitude_model(a.amplitude)};
    SynthOptions options;
    options.sample_rate_hz = a.sample_rate;
    options.seed = settings.seed;

    WavEncoding encoding;
    if (a.encoding == "pcm16") encoding = WavEncoding::Pcm16;
    else if (a.encoding == "float32") encoding = WavEncoding::Float32;
    else throw Error(ErrorCode::InvalidParams, "encoding must be pcm16 or float32");

    const AudioClip clip = synthesize_whistle(profile, options);
    if (out_wav.has_parent_path()) fs::create_directories(out_wav.parent_path());
    write_wav_file(out_wav.string(), clip, encoding);

    const double fvc = flow.fvc_l(), fev1 = flow.fev1_l();
    json truth{{"profile",
                {{"pefr_lps", a.pefr},
                 {"t_peak_s", a.t_peak},
                 {"steepness", a.steepness},
                 {"half_decay_s", a.half_decay},
                 {"duration_s", a.duration}}},
               {"calibration", {{"slope", a.slope}, {"intercept", a.intercept}}},
               {"snr_db", a.snr_db},
               {"amplitude_model", amplitude_model_name(profile.amplitude_model)},
               {"sample_rate_hz", a.sample_rate},
               {"seed", settings.seed},
               {"lead_silence_s", options.lead_silence_s},
               {"fvc_l", fvc},
               {"fev1_l", fev1},
               {"fev1_fvc_ratio", fev1 / fvc},
               {"pefr_lps", a.pefr}};
    fs::path truth_path = out_wav;
    truth_path.replace_extension(".truth.json");
    write_file(truth_path, truth.dump(2) + "\n");

    if (!a.calibration_out.empty()) {
      cal.created_at = utc_timestamp();
      save_calibration(a.calibration_out, cal);
    }
    std::cout << "wrote " << out_wav.string() << " (analytic FVC " << fvc << " L)\n";
    return kExitOk;
  } catch (const Error& e) {
    fail(e, std::nullopt);
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    return fail(Error(ErrorCode::Io, e.what()), std::nullopt);
  }
}

int cmd_serve(const fs::path& store_dir, const std::string& host, int port, const Overrides& overrides) {
  try {
    const Settings settings = resolve(overrides);
    TrialStore store(store_dir, settings.analysis);
    httplib::Server server;
    register_routes(server, store);
    std::cerr << "listening on " << host << ':' << port << " (" << store.size() << " stored trials)\n";
    if (!server.listen(host, port)) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
    return kExitOk;
  } catch (const Error& e) {
    return fail(e, std::nullopt);
  } catch (const fs::filesystem_error& e) {
    return fail(Error(ErrorCode::Io, e.what()), std::nullopt);
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Acoustic spirometry: whistle recordings to lung-function parameters"};
  app.require_subcommand(1);

  Overrides analyze_o, calibrate_o, synth_o, serve_o;

  auto* analyze = app.add_subcommand("analyze", "analyze one to three trial recordings");
  std::vector<std::string> wavs;
  std::string calibration_path, out_dir = "out";
  bool spectrogram = false;
  analyze->add_option("wavs", wavs, "trial WAV files")->required()->expected(1, 3);
  analyze->add_option("-c,--calibration", calibration_path, "calibration profile JSON")->required();
  analyze->add_option("-o,--out", out_dir, "output directory");
  analyze->add_flag("--spectrogram", spectrogram, "also write spectrogram.csv for the selected trial");
  add_analysis_flags(analyze, analyze_o);

  auto* calibrate = app.add_subcommand("calibrate", "fit a calibration profile from constant-flow data");
  std::string csv_path, cal_out = "calibration.json", device_id = "default";
  calibrate->add_option("csv", csv_path, "CSV with flow_lps and freq_hz or wav_path columns")->required();
  calibrate->add_option("-o,--out", cal_out, "output profile path");
  calibrate->add_option("--device-id", device_id, "device_profile_id to record");
  add_analysis_flags(calibrate, calibrate_o);

  auto* synth = app.add_subcommand("synth", "synthesize a whistle recording with known ground truth");
  SynthArgs sa;
  std::string synth_out = "synth.wav";
  synth->add_option("-o,--out", synth_out, "output WAV path; ground truth goes to <stem>.truth.json");
  synth->add_option("--pefr", sa.pefr, "peak flow in L/s");
  synth->add_option("--t-peak", sa.t_peak, "time to peak in s");
  synth->add_option("--steepness", sa.steepness, "Hill steepness a_h");
  synth->add_option("--half-decay", sa.half_decay, "Hill half-decay b_h in s");
  synth->add_option("--duration", sa.duration, "maneuver duration in s");
  synth->add_option("--slope", sa.slope, "calibration slope in Hz per L/s");
  synth->add_option("--intercept", sa.intercept, "calibration intercept in Hz");
  synth->add_option("--snr-db", sa.snr_db, "signal-to-noise ratio in dB");
  synth->add_option("--sample-rate", sa.sample_rate, "sample rate in Hz");
  synth->add_option("--amplitude", sa.amplitude, "constant or proportional");
  synth->add_option("--encoding", sa.encoding, "pcm16 or float32");
  synth->add_option("--calibration-out", sa.calibration_out, "also write the matching calibration profile");
  synth->add_option("--device-id", sa.device_id, "device_profile_id for --calibration-out");
  synth->add_option("--config", synth_o.config_path, "key=value settings file");
  synth->add_option("--seed", synth_o.seed, "noise seed [1]");

  auto* serve = app.add_subcommand("serve", "run the trial-ingestion HTTP service");
  std::string store_dir = "store", host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--store", store_dir, "store directory");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port");
  add_analysis_flags(serve, serve_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  if (*analyze) return cmd_analyze(wavs, calibration_path, out_dir, analyze_o, spectrogram);
  if (*calibrate) return cmd_calibrate(csv_path, cal_out, device_id, calibrate_o);
  if (*synth) return cmd_synth(sa, synth_out, synth_o);
  return cmd_serve(store_dir, host, port, serve_o);
}

}  // namespace spiro::cli
