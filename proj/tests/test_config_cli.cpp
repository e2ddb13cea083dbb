#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "qdcav/config.hpp"
#include "qdcav/io.hpp"
#include "qdcav/presets.hpp"
#include "qdcav/run.hpp"

using namespace qdcav;
namespace fs = std::filesystem;

namespace {

fs::path test_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("qdcav_" + tag + "_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(QDCAV_CLI_BIN) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// csv written by write_csv carries a text header line that read_columns
// rejects on purpose; strip it and parse the body here
std::vector<std::vector<double>> read_csv_body(const fs::path& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::string line;
  std::getline(f, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* s = line.c_str();
    char* end = nullptr;
    while (*s) {
      row.push_back(std::strtod(s, &end));
      REQUIRE(end != s);
      s = (*end == ',') ? end + 1 : end;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// a cheap but fully featured scenario for round-trip tests
const char* mini_scenario = R"(name = mini

[sim]
g_ghz = 1.72
kappa_ghz = 22.0
gamma_qd_ghz = 0.036
relax_time_ps = 10.0
n_fock = 1
initial_state = ground

[pump]
enabled = true
t0_ns = 0.05
width_ps = 70.0
excitation_probability = 0.5

[schedule]
kind = constant
exciton_energy_mev = 978.02

[run]
t_end_ns = 0.6
sample_dt_ps = 1.0

[metrics]
decay_fit_start_ns = 0.3
decay_fit_end_ns = 0.6
)";

}  // namespace

TEST_CASE("config parser basics") {
  auto cfg = parse_config_text("name = demo\n# comment\n\n[sim]\ng_ghz = 2.0  # inline\n", "t");
  REQUIRE(cfg.sections.size() == 2);
  CHECK(cfg.sections[0].entries.size() == 1);
  CHECK(cfg.sections[0].entries[0].key == "name");
  CHECK(cfg.sections[0].entries[0].value == "demo");
  CHECK(cfg.sections[1].name == "sim");
  CHECK(cfg.sections[1].entries[0].value == "2.0");
  CHECK(cfg.sections[1].entries[0].line == 5);
}

TEST_CASE("config parser rejects malformed input") {
  try {
    parse_config_text("a = 1\na = 2\n", "t");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("duplicate key 'a'") != std::string::npos);
  }

  try {
    parse_config_text("[sim]\n[sim]\n", "t");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("duplicate section") != std::string::npos);
  }

  try {
    parse_config_text("[sim\n", "t");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 1);
    CHECK(std::string(e.what()).find("unterminated") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_config_text("key =\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just text\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("= 3\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[]\n", "t"), ConfigError);
}

TEST_CASE("scenario resolution converts units") {
  auto cfg = resolve_scenario(parse_config_text(mini_scenario, "mini"));
  CHECK(cfg.name == "mini");
  CHECK(cfg.params.g == ghz_to_rad_per_ns(1.72));
  CHECK(cfg.params.kappa_cav == ghz_to_rad_per_ns(22.0));
  CHECK(cfg.params.gamma_qd == ghz_to_rad_per_ns(0.036));
  CHECK(cfg.params.gamma_relax == Catch::Approx(100.0).epsilon(1e-12));
  CHECK(cfg.params.n_fock == 1);
  CHECK(cfg.params.omega_cav == mev_to_rad_per_ns(978.02));
  CHECK(cfg.initial_state == InitialState::ground);

  CHECK(cfg.params.pump.t0 == 0.05);
  CHECK(cfg.params.pump.width == Catch::Approx(0.07).epsilon(1e-12));
  CHECK(excitation_probability(cfg.params.pump) == Catch::Approx(0.5).epsilon(1e-12));

  CHECK(cfg.schedule_kind == "constant");
  CHECK(cfg.schedule.is_constant());
  CHECK(cfg.schedule.detuning(0.0) == Catch::Approx(0.0).margin(1e-9));

  CHECK(cfg.run.t_end == 0.6);
  CHECK(cfg.run.sample_dt == Catch::Approx(1e-3).epsilon(1e-12));
  REQUIRE(cfg.metrics.decay_window.has_value());
  CHECK(cfg.metrics.decay_window->first == 0.3);

  // defaults: all artifacts except the fit dump
  CHECK(cfg.artifacts.trajectory);
  CHECK(cfg.artifacts.waveform);
  CHECK(cfg.artifacts.metrics);
  CHECK(!cfg.artifacts.fits);
}

TEST_CASE("scenario resolution catches contradictions") {
  auto patched = [&](const std::string& find, const std::string& replace) {
    std::string text = mini_scenario;
    auto pos = text.find(find);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, find.size(), replace);
    return parse_config_text(text, "mini");
  };

  // unknown key, named with its section
  try {
    resolve_scenario(patched("g_ghz = 1.72", "g_ghz = 1.72\ncoupling = 3"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("unknown key 'sim.coupling'") != std::string::npos);
  }

  CHECK_THROWS_AS(resolve_scenario(patched("[metrics]", "[cavity]")), ConfigError);
  CHECK_THROWS_AS(resolve_scenario(patched("g_ghz = 1.72", "g_ghz = -1")), ConfigError);
  CHECK_THROWS_AS(resolve_scenario(patched("n_fock = 1", "n_fock = 0")), ConfigError);
  CHECK_THROWS_AS(resolve_scenario(patched("n_fock = 1", "n_fock = 1.5")), ConfigError);
  CHECK_THROWS_AS(resolve_scenario(patched("initial_state = ground", "initial_state = photon")),
                  ConfigError);
  CHECK_THROWS_AS(resolve_scenario(patched("t_end_ns = 0.6", "t_end_ns = -0.1")), ConfigError);
  CHECK_THROWS_AS(resolve_scenario(patched("kind = constant", "kind = triangle")), ConfigError);
  CHECK_THROWS_AS(
      resolve_scenario(patched("exciton_energy_mev = 978.02", "exciton_energy_mev = what")),
      ConfigError);
  // both pump parametrizations at once
  CHECK_THROWS_AS(resolve_scenario(patched("excitation_probability = 0.5",
                                           "excitation_probability = 0.5\namplitude_per_ns = 9.9")),
                  ConfigError);
  // pump enabled without a firing time
  CHECK_THROWS_AS(resolve_scenario(patched("t0_ns = 0.05", "t0_ns = 0.05x")), ConfigError);
  // one-sided decay window
  CHECK_THROWS_AS(resolve_scenario(patched("decay_fit_end_ns = 0.6", "")), ConfigError);
  CHECK_THROWS_AS(resolve_scenario(patched("decay_fit_end_ns = 0.6", "decay_fit_end_ns = 0.2")),
                  ConfigError);

  // schedule keys for a different kind are rejected, required ones enforced
  CHECK_THROWS_AS(
      resolve_scenario(patched("exciton_energy_mev = 978.02",
                               "exciton_energy_mev = 978.02\nperiod_ns = 10")),
      ConfigError);
  try {
    resolve_scenario(patched("kind = constant\nexciton_energy_mev = 978.02",
                             "kind = rc_square_wave\nenergy_a_mev = 978.02"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("schedule.energy_b_mev is required") != std::string::npos);
  }
}

TEST_CASE("scenario resolution without optional sections") {
  const char* bare =
      "[schedule]\nkind = constant\nexciton_energy_mev = 977.02\n\n[run]\nt_end_ns = 1.0\n";
  auto cfg = resolve_scenario(parse_config_text(bare, "bare"));
  CHECK(cfg.name == "scenario");
  CHECK(cfg.params.pump.amplitude == 0.0);
  CHECK(!cfg.metrics.decay_window.has_value());
  // 1 meV red detuning in the 978.02 frame
  CHECK(cfg.schedule.detuning(0.0) ==
        Catch::Approx(mev_to_rad_per_ns(977.02) - mev_to_rad_per_ns(978.02)).epsilon(1e-12));

  CHECK_THROWS_AS(resolve_scenario(parse_config_text("[run]\nt_end_ns = 1\n", "t")), ConfigError);
  CHECK_THROWS_AS(
      resolve_scenario(parse_config_text("[schedule]\nkind = constant\nexciton_energy_mev = 978\n", "t")),
      ConfigError);
}

TEST_CASE("artifact selection list") {
  std::string text = mini_scenario;
  text += "\n[outputs]\nartifacts = waveform, metrics\n";
  auto cfg = resolve_scenario(parse_config_text(text, "t"));
  CHECK(!cfg.artifacts.trajectory);
  CHECK(cfg.artifacts.waveform);
  CHECK(cfg.artifacts.metrics);
  CHECK(!cfg.artifacts.fits);

  std::string bad = mini_scenario;
  bad += "\n[outputs]\nartifacts = waveform, png\n";
  CHECK_THROWS_AS(resolve_scenario(parse_config_text(bad, "t")), ConfigError);
}

TEST_CASE("sampled schedule loads relative to the config file") {
  fs::path dir = test_dir("sampled");
  write_file(dir / "trace.csv",
             "# emitter line vs time\n0.0, 978.02\n1.0, 977.89\n2.0  977.89\n");
  std::string text =
      "[schedule]\nkind = sampled\nfile = trace.csv\n\n[run]\nt_end_ns = 1.5\n";
  write_file(dir / "scenario.ini", text);

  auto cfg = load_scenario_file(dir / "scenario.ini");
  CHECK(cfg.schedule_kind == "sampled");
  CHECK(cfg.schedule.detuning(0.0) == Catch::Approx(0.0).margin(1e-9));
  CHECK(cfg.schedule.detuning(2.0) ==
        Catch::Approx(mev_to_rad_per_ns(977.89 - 978.02)).epsilon(1e-9));
  auto bp = cfg.schedule.breakpoints(0.0, 1.5);
  REQUIRE(bp.size() == 1);
  CHECK(bp[0] == 1.0);

  // a one-point trace is useless and says so with the file named
  write_file(dir / "short.csv", "0.0 978.02\n");
  write_file(dir / "bad.ini",
             "[schedule]\nkind = sampled\nfile = short.csv\n\n[run]\nt_end_ns = 1.0\n");
  try {
    load_scenario_file(dir / "bad.ini");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("short.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("sweep key plumbing") {
  auto raw = parse_config_text(mini_scenario, "mini");
  set_config_value(raw, "sim", "g_ghz", "2.5");
  CHECK(resolve_scenario(raw).params.g == ghz_to_rad_per_ns(2.5));
  // appending into a fresh section works too
  set_config_value(raw, "outputs", "artifacts", "metrics");
  CHECK(!resolve_scenario(raw).artifacts.trajectory);

  const auto& names = sweepable_parameters();
  for (const char* key : {"sim.g_ghz", "sim.kappa_ghz", "schedule.delta_ns", "schedule.tau_rc_ps",
                          "pump.excitation_probability", "run.t_end_ns"})
    CHECK(names.count(key) == 1);
  CHECK(names.count("sim.bogus") == 0);
  CHECK(names.count("name") == 0);
}

TEST_CASE("shipped presets resolve") {
  REQUIRE(presets().size() == 8);
  for (const auto& p : presets()) {
    INFO(p.name);
    auto cfg = load_preset(p.name);
    CHECK(cfg.name == p.name);
    CHECK(cfg.run.t_end > cfg.run.t_start);
  }

  auto on = load_preset("fig2b_on");
  CHECK(on.schedule.is_constant());
  CHECK(on.params.pump.amplitude > 0.0);
  REQUIRE(on.metrics.decay_window.has_value());

  auto wave = load_preset("fig4b");
  CHECK(wave.schedule.is_rc_square_wave());
  REQUIRE(wave.schedule.rc_wave() != nullptr);
  CHECK(wave.schedule.rc_wave()->period == Catch::Approx(16.67));

  auto check = load_preset("weak_coupling_check");
  CHECK(check.initial_state == InitialState::exciton);
  CHECK(check.params.pump.amplitude == 0.0);

  CHECK_THROWS_AS(preset_info("fig9z"), ConfigError);
  try {
    preset_info("fig9z");
  } catch (const ConfigError& e) {
    // the error lists what is available
    CHECK(std::string(e.what()).find("fig2b_on") != std::string::npos);
  }
}

TEST_CASE("double formatting round trips") {
  for (double v : {0.0, 1.0, 0.1, -2.5e-7, 3.141592653589793, 978.02, 1e300, -1e-300}) {
    std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv writing is exact and deterministic") {
  fs::path dir = test_dir("csv");
  std::vector<double> a{0.0, 1.0, 2.0}, b{0.5, 0.1, -3.0};
  write_csv(dir / "t.csv", {"x", "y"}, {&a, &b});
  CHECK(read_file_bytes(dir / "t.csv") == "x,y\n0,0.5\n1,0.10000000000000001\n2,-3\n");

  write_csv(dir / "t2.csv", {"x", "y"}, {&a, &b});
  CHECK(fnv1a64_hex(read_file_bytes(dir / "t.csv")) == fnv1a64_hex(read_file_bytes(dir / "t2.csv")));

  std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(write_csv(dir / "t3.csv", {"x", "y"}, {&a, &shorter}), DomainError);
  CHECK_THROWS_AS(write_csv(dir / "t4.csv", {"x"}, {&a, &b}), DomainError);
  fs::remove_all(dir);
}

TEST_CASE("column reader accepts comments and mixed delimiters") {
  fs::path dir = test_dir("cols");
  write_file(dir / "d.csv", "# header note\n0.0, 1.0\n0.5\t2.0\n1.0 3.0 # trailing\n");
  auto data = read_columns(dir / "d.csv", 2);
  REQUIRE(data.rows.size() == 3);
  CHECK(data.rows[1][0] == 0.5);
  CHECK(data.rows[2][1] == 3.0);
  REQUIRE(data.comments.size() == 2);
  CHECK(data.comments[0] == "header note");

  write_file(dir / "ragged.csv", "1 2\n3\n");
  try {
    read_columns(dir / "ragged.csv", 2);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
  }

  write_file(dir / "words.csv", "1 2\n3 four\n");
  try {
    read_columns(dir / "words.csv", 2);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
    CHECK(e.column == 3);
    CHECK(std::string(e.what()).find("'four'") != std::string::npos);
  }

  CHECK_THROWS_AS(read_columns(dir / "missing.csv", 2), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("reflection file formats") {
  fs::path dir = test_dir("s11");
  write_file(dir / "reim.csv", "1.0 0.25 -0.5\n2.0 0.3 -0.4\n");
  auto samples = read_s11_file(dir / "reim.csv");
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].f_ghz == 1.0);
  CHECK(samples[0].value == Complex(0.25, -0.5));

  // -6.0206 dB is amplitude 1/2; 90 degrees puts it on the imaginary axis
  write_file(dir / "mp.csv", "# format: magphase\n1.0 -6.020599913279624 90.0\n");
  auto mp = read_s11_file(dir / "mp.csv");
  REQUIRE(mp.size() == 1);
  CHECK(mp[0].value.real() == Catch::Approx(0.0).margin(1e-12));
  CHECK(mp[0].value.imag() == Catch::Approx(0.5).epsilon(1e-12));

  // the caller can override the header detection
  auto forced = read_s11_file(dir / "mp.csv", S11Format::re_im);
  CHECK(forced[0].value == Complex(-6.020599913279624, 90.0));

  write_file(dir / "odd.csv", "# format: polar\n1.0 0.5 0.0\n");
  CHECK_THROWS_AS(read_s11_file(dir / "odd.csv"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("fnv-1a 64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("scenario run produces the metric set") {
  auto cfg = resolve_scenario(parse_config_text(mini_scenario, "mini"));
  auto res = run_scenario(cfg);
  const Json& m = res.metrics;
  for (const char* key :
       {"name", "schedule_kind", "peak_emission_per_ns", "peak_time_ns", "total_cavity_emission",
        "total_leak_emission", "residual_excitation", "delivered_excitation", "cavity_fraction",
        "effective_delta_t_ns", "emission_rise_10_90_ns", "rate_rise_10_90_ns", "symmetry_metric",
        "gaussian_residual_rms", "gaussian_fit", "decay_fit", "health"}) {
    INFO(key);
    CHECK(m.contains(key));
  }
  CHECK(m["name"] == "mini");
  CHECK(m["peak_emission_per_ns"].get<double>() > 0.0);
  // constant detuning: no swing, so the timing metrics stay null
  CHECK(m["effective_delta_t_ns"].is_null());
  CHECK(m["rate_rise_10_90_ns"].is_null());
  CHECK(m["decay_fit"].is_object());
  CHECK(m["decay_fit"]["converged"].get<bool>());
  CHECK(m["health"]["max_trace_error"].get<double>() < 1e-8);
}

TEST_CASE("simulation artifacts and manifest") {
  fs::path dir = test_dir("sim");
  auto cfg = resolve_scenario(parse_config_text(mini_scenario, "mini"));
  cfg.artifacts.fits = true;
  run_simulate(cfg, dir / "a");

  for (const char* name : {"trajectory.csv", "waveform.csv", "metrics.json", "fits.txt",
                           "manifest.json"}) {
    INFO(name);
    CHECK(fs::exists(dir / "a" / name));
  }

  Json manifest = Json::parse(read_file_bytes(dir / "a" / "manifest.json"));
  CHECK(manifest["tool"]["name"] == "qdcav");
  // unit round trip: the echoed parameters reproduce the resolved ones bitwise
  CHECK(manifest["config"]["sim"]["g_rad_per_ns"].get<double>() == cfg.params.g);
  CHECK(manifest["config"]["sim"]["kappa_rad_per_ns"].get<double>() == cfg.params.kappa_cav);
  CHECK(manifest["config"]["pump"]["excitation_probability"].get<double>() ==
        excitation_probability(cfg.params.pump));
  CHECK(manifest["config"]["run"]["sample_dt_ns"].get<double>() == cfg.run.sample_dt);
  CHECK(manifest["config"]["schedule"]["detuning_rad_per_ns"].get<double>() ==
        cfg.schedule.detuning(0.0));

  // recorded artifact hashes match the bytes on disk
  for (auto& [name, entry] : manifest["artifacts"].items()) {
    std::string bytes = read_file_bytes(dir / "a" / name);
    CHECK(entry["bytes"].get<std::size_t>() == bytes.size());
    CHECK(entry["fnv1a64"].get<std::string>() == fnv1a64_hex(bytes));
  }

  // a second run is byte-identical apart from the manifest timestamp
  run_simulate(cfg, dir / "b");
  for (const char* name : {"trajectory.csv", "waveform.csv", "metrics.json", "fits.txt"}) {
    INFO(name);
    CHECK(read_file_bytes(dir / "a" / name) == read_file_bytes(dir / "b" / name));
  }

  std::string fits = read_file_bytes(dir / "a" / "fits.txt");
  CHECK(fits.find("[gaussian]") != std::string::npos);
  CHECK(fits.find("[decay]") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("schedule export") {
  fs::path dir = test_dir("sched");

  auto wave = load_preset("fig4a");
  run_schedule_export(wave, dir / "wave.csv", 1e-3);
  auto rows = read_csv_body(dir / "wave.csv");
  const RcSquareWave* w = wave.schedule.rc_wave();
  REQUIRE(w != nullptr);
  REQUIRE(rows.size() == std::size_t(std::floor(w->period / 1e-3 * (1.0 + 1e-12))) + 1);
  CHECK(rows[0][0] == 0.0);

  // plateau levels: sample a quarter period after each switch instant
  double t_hi = detail::wrap(w->delay + 0.25 * w->period, w->period);
  double t_lo = detail::wrap(w->delay + 0.75 * w->period, w->period);
  auto energy_at = [&](double t) {
    std::size_t k = std::size_t(std::lround(t / 1e-3));
    REQUIRE(k < rows.size());
    return rows[k][1];
  };
  CHECK(energy_at(t_hi) == Catch::Approx(977.89).margin(2e-3));
  CHECK(energy_at(t_lo) == Catch::Approx(978.02).margin(2e-3));

  // constant schedules export their single value over a nominal span
  auto flat = resolve_scenario(parse_config_text(mini_scenario, "mini"));
  run_schedule_export(flat, dir / "flat.csv", 0.1);
  auto frows = read_csv_body(dir / "flat.csv");
  REQUIRE(frows.size() == 11);
  for (const auto& row : frows) {
    CHECK(row[1] == Catch::Approx(978.02).epsilon(1e-12));
    CHECK(row[2] == Catch::Approx(0.0).margin(1e-9));
  }

  // a nanosecond-period wave with a femtosecond filter is an ideal square
  std::string sq = mini_scenario;
  auto pos = sq.find("kind = constant\nexciton_energy_mev = 978.02");
  sq.replace(pos, std::string("kind = constant\nexciton_energy_mev = 978.02").size(),
             "kind = rc_square_wave\nenergy_a_mev = 978.02\nenergy_b_mev = 977.89\n"
             "period_ns = 2.0\ntau_rc_ps = 0.001");
  auto square = resolve_scenario(parse_config_text(sq, "sq"));
  run_schedule_export(square, dir / "square.csv", 0.01);
  auto srows = read_csv_body(dir / "square.csv");
  for (const auto& row : srows) {
    double t = row[0], e = row[1];
    if (t > 0.0 && t < 1.0) CHECK(e == Catch::Approx(977.89).epsilon(1e-9));
    if (t > 1.0 && t < 2.0 + 1e-12) CHECK(e == Catch::Approx(978.02).epsilon(1e-9));
  }

  CHECK_THROWS_AS(run_schedule_export(flat, dir / "x.csv", 0.0), DomainError);
  fs::remove_all(dir);
}

TEST_CASE("parameter sweep") {
  fs::path dir = test_dir("sweep");
  auto base = parse_config_text(mini_scenario, "mini");

  auto outcome = run_sweep(base, "sim.g_ghz", {0.5, 1.72}, dir, 1);
  REQUIRE(outcome.run_dirs.size() == 2);
  CHECK(outcome.run_dirs[0] == "000_0.5");
  CHECK(outcome.run_dirs[1] == "001_1.72");
  CHECK(outcome.errors[0].empty());
  CHECK(outcome.errors[1].empty());
  CHECK(fs::exists(dir / "000_0.5" / "metrics.json"));
  CHECK(fs::exists(dir / "summary.csv"));

  // stronger coupling drains the exciton faster
  Json m0 = Json::parse(read_file_bytes(dir / "000_0.5" / "metrics.json"));
  Json m1 = Json::parse(read_file_bytes(dir / "001_1.72" / "metrics.json"));
  double r0 = m0["decay_fit"]["rate_per_ns"].get<double>();
  double r1 = m1["decay_fit"]["rate_per_ns"].get<double>();
  CHECK(r1 > 2.0 * r0);

  std::string summary = read_file_bytes(dir / "summary.csv");
  CHECK(summary.rfind("sim.g_ghz,ok,peak_emission_per_ns,", 0) == 0);
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
  CHECK(summary.find("\n0.5,1,") != std::string::npos);
  CHECK(summary.find("\n1.72,1,") != std::string::npos);

  // a failing point is reported per run, not thrown
  auto mixed = run_sweep(base, "sim.g_ghz", {1.0, -1.0}, dir / "mixed", 1);
  CHECK(mixed.errors[0].empty());
  CHECK(!mixed.errors[1].empty());
  CHECK(mixed.errors[1].find("g_ghz") != std::string::npos);

  CHECK_THROWS_AS(run_sweep(base, "sim.bogus", {1.0}, dir / "x"), ConfigError);
  CHECK_THROWS_AS(run_sweep(base, "sim.g_ghz", {}, dir / "y"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("file fits") {
  fs::path dir = test_dir("fit");

  std::string exp_data;
  for (int i = 0; i <= 100; ++i) {
    double t = 0.02 * i;
    exp_data += format_double(t) + " " + format_double(2.0 * std::exp(-t / 0.27)) + "\n";
  }
  write_file(dir / "decay.txt", exp_data);
  auto rep = fit_file("exp", dir / "decay.txt");
  CHECK(rep.fit.converged);
  CHECK(rep.fit.params[1] == Catch::Approx(0.27).epsilon(1e-6));
  CHECK(rep.extras["rate_per_ns"].get<double>() == Catch::Approx(1.0 / 0.27).epsilon(1e-6));

  DiodeModel truth{180.0, 0.3};
  std::string s11_data = "# format: reim\n";
  for (int i = 0; i < 12; ++i) {
    double f = 0.2 + 0.5 * i;
    Complex v = s11_of(truth, f);
    s11_data += format_double(f) + " " + format_double(v.real()) + " " + format_double(v.imag()) + "\n";
  }
  write_file(dir / "refl.txt", s11_data);
  auto rc = fit_file("s11", dir / "refl.txt");
  CHECK(rc.fit.converged);
  CHECK(rc.extras["r_series_ohm"].get<double>() == Catch::Approx(180.0).epsilon(1e-6));
  CHECK(rc.extras["c_junction_pf"].get<double>() == Catch::Approx(0.3).epsilon(1e-6));
  CHECK(rc.extras["bandwidth_3db_ghz"].get<double>() ==
        Catch::Approx(bandwidth_3db_ghz(230.0, 0.3)).epsilon(1e-6));

  std::string report = render_fit_report(rc);
  CHECK(report.find("model = s11") != std::string::npos);
  CHECK(report.find("converged = true") != std::string::npos);
  CHECK(report.find("r_series_ohm = ") != std::string::npos);
  CHECK(report.find("bandwidth_3db_ghz = ") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
  fs::path dir = test_dir("cli");

  CHECK(run_cli("presets") == 0);
  CHECK(run_cli("presets --show fig4b") == 0);
  CHECK(run_cli("presets --show fig9z") == 2);
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("simulate") == 2);                 // no scenario source
  CHECK(run_cli("definitely-not-a-command") == 2); // parser error

  write_file(dir / "bad.ini", std::string(mini_scenario) + "\n[sim2]\nx = 1\n");
  CHECK(run_cli("simulate --config " + (dir / "bad.ini").string()) == 2);

  write_file(dir / "mini.ini", mini_scenario);
  CHECK(run_cli("simulate --config " + (dir / "mini.ini").string() + " --out " +
                (dir / "run").string()) == 0);
  CHECK(fs::exists(dir / "run" / "manifest.json"));

  CHECK(run_cli("schedule --preset fig4a --out " + (dir / "sched.csv").string()) == 0);
  CHECK(fs::exists(dir / "sched.csv"));

  CHECK(run_cli("sweep --param sim.bogus --values 1,2 --config " + (dir / "mini.ini").string() +
                " --out " + (dir / "sw").string()) == 2);

  // a flat spectrum leaves the line position unidentifiable: fit exits 5
  std::string flat;
  for (int i = 0; i < 10; ++i) flat += format_double(977.0 + 0.1 * i) + " 3.0\n";
  write_file(dir / "flat.txt", flat);
  CHECK(run_cli("fit lorentzian " + (dir / "flat.txt").string() + " --out " +
                (dir / "flat.fit.txt").string()) == 5);

  std::string exp_data;
  for (int i = 0; i <= 40; ++i) {
    double t = 0.05 * i;
    exp_data += format_double(t) + " " + format_double(std::exp(-t / 0.5)) + "\n";
  }
  write_file(dir / "decay.txt", exp_data);
  CHECK(run_cli("fit exp " + (dir / "decay.txt").string() + " --out " +
                (dir / "decay.fit.txt").string()) == 0);
  CHECK(fs::exists(dir / "decay.fit.txt"));

  CHECK(run_cli("fit exp " + (dir / "nothere.txt").string()) == 2);
  fs::remove_all(dir);
}
