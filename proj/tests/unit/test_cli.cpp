#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "../support.hpp"
#include "spiro/cli.hpp"
#include "spiro/json_io.hpp"
#include "spiro/synth.hpp"

using namespace spiro;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string err;
};

Run spiro_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "spiro");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream err, out;
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  const int code = cli::run(static_cast<int>(argv.size()), argv.data());
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  return {code, err.str()};
}

json read_json(const std::string& path) { return json::parse(read_text(path)); }

std::vector<double> csv_column(const std::string& path, std::size_t col) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i <= col; ++i) std::getline(ss, cell, ',');
    out.push_back(std::stod(cell));
  }
  return out;
}

// Synthesizes the reference maneuver plus its calibration into dir.
void make_fixture(const test::TempDir& dir) {
  REQUIRE(spiro_cli({"synth", "-o", dir / "trial.wav", "--calibration-out", dir / "cal.json", "--seed", "4"})
              .code == 0);
}

}  // namespace

TEST_CASE("analyze writes every artifact") {
  test::TempDir dir;
  make_fixture(dir);
  const Run r = spiro_cli({"analyze", dir / "trial.wav", "-c", dir / "cal.json", "-o", dir / "out"});
  REQUIRE(r.code == cli::kExitOk);
  for (const char* f : {"report.json", "trace.csv", "flow_time.csv", "flow_time.svg", "volume_time.svg",
                        "flow_volume.svg"})
    CHECK(fs::exists(dir / ("out/" + std::string(f))));
  CHECK(!fs::exists(dir / "out/error.json"));

  const json report = read_json(dir / "out/report.json");
  const json truth = read_json(dir / "trial.truth.json");
  CHECK(report["fvc_l"].get<double>() == doctest::Approx(truth["fvc_l"].get<double>()).epsilon(0.05));
  CHECK(report["pefr_lps"].get<double>() == doctest::Approx(truth["pefr_lps"].get<double>()).epsilon(0.05));
  CHECK(std::abs(report["fev1_fvc_ratio"].get<double>() - truth["fev1_fvc_ratio"].get<double>()) < 0.02);

  // Everything the command wrote lives under the output directory.
  std::size_t outside = 0;
  for (const auto& e : fs::directory_iterator(dir.path()))
    if (e.path().filename() != "out" && e.path().filename() != "trial.wav" &&
        e.path().filename() != "trial.truth.json" && e.path().filename() != "cal.json")
      ++outside;
  CHECK(outside == 0);
}

TEST_CASE("analyze across trials marks the best") {
  test::TempDir dir;
  make_fixture(dir);
  REQUIRE(spiro_cli({"synth", "-o", dir / "low.wav", "--pefr", "6", "--seed", "5"}).code == 0);
  const Run r = spiro_cli({"analyze", dir / "low.wav", dir / "trial.wav", "-c", dir / "cal.json", "-o",
                           dir / "out", "--spectrogram"});
  REQUIRE(r.code == 0);
  const json report = read_json(dir / "out/report.json");
  CHECK(report["pipeline_metadata"]["selected_trial"] == 1);
  CHECK(fs::exists(dir / "out/trials/trial_0.json"));
  CHECK(fs::exists(dir / "out/trials/trial_1.json"));
  CHECK(fs::exists(dir / "out/spectrogram.csv"));
}

TEST_CASE("analyze error contract") {
  test::TempDir dir;
  make_fixture(dir);

  const Run missing = spiro_cli({"analyze", dir / "trial.wav", "-c", dir / "nope.json", "-o", dir / "o1"});
  CHECK(missing.code == cli::kExitInput);
  CHECK(json::parse(missing.err)["error"]["code"] == "calibration_not_found");
  CHECK(read_json(dir / "o1/error.json")["error"]["code"] == "calibration_not_found");

  AudioClip silent;
  silent.samples.assign(44100, 0.0);
  write_wav_file(dir / "silent.wav", silent);
  const Run quiet = spiro_cli({"analyze", dir / "silent.wav", "-c", dir / "cal.json", "-o", dir / "o2"});
  CHECK(quiet.code == cli::kExitAnalysis);
  CHECK(read_json(dir / "o2/error.json")["error"]["code"] == "no_trace");

  std::ofstream(dir / "garbage.wav") << "definitely not RIFF";
  const Run garbage = spiro_cli({"analyze", dir / "garbage.wav", "-c", dir / "cal.json", "-o", dir / "o3"});
  CHECK(garbage.code == cli::kExitInput);
  CHECK(read_json(dir / "o3/error.json")["error"]["code"] == "malformed_file");

  const Run bad_flag =
      spiro_cli({"analyze", dir / "trial.wav", "-c", dir / "cal.json", "-o", dir / "o4", "--hop", "0"});
  CHECK(bad_flag.code == cli::kExitInput);
  CHECK(read_json(dir / "o4/error.json")["error"]["code"] == "invalid_params");
}

TEST_CASE("flags beat the config file, which beats defaults") {
  test::TempDir dir;
  make_fixture(dir);
  std::ofstream(dir / "spiro.conf") << "grid-ms = 2\nsmooth_window = 3\n";
  const auto step = [&](const std::string& out) {
    const auto t = csv_column(dir / (out + "/flow_time.csv"), 0);
    REQUIRE(t.size() > 2);
    return t[1] - t[0];
  };
  REQUIRE(spiro_cli({"analyze", dir / "trial.wav", "-c", dir / "cal.json", "-o", dir / "d"}).code == 0);
  REQUIRE(spiro_cli({"analyze", dir / "trial.wav", "-c", dir / "cal.json", "-o", dir / "f", "--config",
                     dir / "spiro.conf"})
              .code == 0);
  REQUIRE(spiro_cli({"analyze", dir / "trial.wav", "-c", dir / "cal.json", "-o", dir / "g", "--config",
                     dir / "spiro.conf", "--grid-ms", "5"})
              .code == 0);
  // The grid step is the largest one not above grid-ms that lands on the peak.
  CHECK(step("d") <= 0.001 + 1e-12);
  CHECK(step("d") > 0.0009);
  CHECK(step("f") <= 0.002 + 1e-12);
  CHECK(step("f") > 0.0018);
  CHECK(step("g") <= 0.005 + 1e-12);
  CHECK(step("g") > 0.0045);

  std::ofstream(dir / "bad.conf") << "wobble = 3\n";
  CHECK(spiro_cli({"analyze", dir / "trial.wav", "-c", dir / "cal.json", "-o", dir / "b", "--config",
                   dir / "bad.conf"})
            .code == cli::kExitInput);
}

TEST_CASE("calibrate from a frequency table") {
  test::TempDir dir;
  std::ofstream(dir / "points.csv") << "flow_lps,freq_hz\n1,600\n2,1000\n4,1800\n";
  REQUIRE(spiro_cli({"calibrate", dir / "points.csv", "-o", dir / "cal.json", "--device-id", "dev7"}).code == 0);
  const json cal = read_json(dir / "cal.json");
  CHECK(cal["slope"].get<double>() == doctest::Approx(400.0));
  CHECK(cal["intercept"].get<double>() == doctest::Approx(200.0));
  CHECK(cal["r_squared"].get<double>() == doctest::Approx(1.0));
  CHECK(cal["residual_std_hz"].get<double>() == doctest::Approx(0.0));
  CHECK(cal["flow_range_lps"] == json::array({1.0, 4.0}));
  CHECK(cal["device_profile_id"] == "dev7");
  CHECK(!cal["created_at"].get<std::string>().empty());

  std::ofstream(dir / "flat.csv") << "flow_lps,freq_hz\n2,600\n2,1000\n";
  const Run flat = spiro_cli({"calibrate", dir / "flat.csv", "-o", dir / "c2.json"});
  CHECK(flat.code == cli::kExitInput);
  CHECK(json::parse(flat.err)["error"]["code"] == "degenerate_fit");

  std::ofstream(dir / "one.csv") << "flow_lps,freq_hz\n2,600\n";
  CHECK(spiro_cli({"calibrate", dir / "one.csv", "-o", dir / "c3.json"}).code == cli::kExitInput);
  std::ofstream(dir / "nohdr.csv") << "a,b\n2,600\n";
  CHECK(spiro_cli({"calibrate", dir / "nohdr.csv", "-o", dir / "c4.json"}).code == cli::kExitInput);
}

TEST_CASE("calibrate from steady-flow recordings") {
  test::TempDir dir;
  fs::create_directories(dir / "rec");
  std::ofstream csv(dir / "rec/points.csv");
  csv << "flow_lps,wav_path\n";
  for (double q : {1.0, 3.0, 5.0, 7.0}) {
    const std::string name = "q" + std::to_string(static_cast<int>(q)) + ".wav";
    write_wav_file(dir / ("rec/" + name), test::tone(350.0 * q + 250.0, 1.5, 44100, 0.5));
    csv << q << "," << name << "\n";
  }
  csv.close();
  REQUIRE(spiro_cli({"calibrate", dir / "rec/points.csv", "-o", dir / "cal.json"}).code == 0);
  const json cal = read_json(dir / "cal.json");
  CHECK(cal["slope"].get<double>() == doctest::Approx(350.0).epsilon(0.01));
  CHECK(cal["intercept"].get<double>() == doctest::Approx(250.0).epsilon(0.05));
}

TEST_CASE("synth writes a reproducible clip and its ground truth") {
  test::TempDir dir;
  REQUIRE(spiro_cli({"synth", "-o", dir / "a.wav", "--seed", "9"}).code == 0);
  REQUIRE(spiro_cli({"synth", "-o", dir / "b.wav", "--seed", "9"}).code == 0);
  REQUIRE(spiro_cli({"synth", "-o", dir / "c.wav", "--seed", "10"}).code == 0);
  CHECK(read_text(dir / "a.wav") == read_text(dir / "b.wav"));
  CHECK(read_text(dir / "a.wav") != read_text(dir / "c.wav"));

  const json truth = read_json(dir / "a.truth.json");
  const FlowProfile p = reference_flow_profile(8.0, 0.1, 3.0, 0.8, 6.0);
  const auto f = [&](double t) { return p.flow_at(t); };
  using boost::math::quadrature::gauss_kronrod;
  const double fvc = gauss_kronrod<double, 61>::integrate(f, 0.0, 0.1, 15, 1e-14) +
                     gauss_kronrod<double, 61>::integrate(f, 0.1, 6.0, 15, 1e-14);
  CHECK(truth["fvc_l"].get<double>() == doctest::Approx(fvc).epsilon(1e-10));
  CHECK(truth["pefr_lps"] == 8.0);
  CHECK(truth["seed"] == 9);

  const AudioClip clip = read_wav_file(dir / "a.wav");
  CHECK(clip.duration_s() == doctest::Approx(6.5).epsilon(1e-4));

  const Run bad = spiro_cli({"synth", "-o", dir / "x.wav", "--pefr", "-1"});
  CHECK(bad.code == cli::kExitInput);
  CHECK(json::parse(bad.err)["error"]["code"] == "invalid_params");
  const Run high = spiro_cli({"synth", "-o", dir / "y.wav", "--slope", "4000"});
  CHECK(high.code == cli::kExitInput);
  CHECK(json::parse(high.err)["error"]["code"] == "frequency_above_nyquist");
}

TEST_CASE("usage errors exit with the input code") {
  CHECK(spiro_cli({}).code == cli::kExitInput);
  CHECK(spiro_cli({"analyze"}).code == cli::kExitInput);
  CHECK(spiro_cli({"frobnicate"}).code == cli::kExitInput);
  CHECK(spiro_cli({"--help"}).code == cli::kExitOk);
}
