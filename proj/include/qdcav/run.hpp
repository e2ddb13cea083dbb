#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qdcav/analysis.hpp"
#include "qdcav/config.hpp"
#include "qdcav/device.hpp"
#include "qdcav/dynamics.hpp"
#include "qdcav/io.hpp"
#include "qdcav/presets.hpp"
#include "qdcav/version.hpp"

// Scenario execution: run the integrator, derive the metric set, and lay the
// artifacts down as CSV/JSON files. Everything except the manifest timestamp
// is bitwise reproducible.

namespace qdcav {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string iso_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json json_or_null(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

inline Json fit_to_json(const FitResult& fit) {
  Json j;
  for (std::size_t i = 0; i < fit.param_names.size(); ++i)
    j[fit.param_names[i]] = fit.params[Eigen::Index(i)];
  j["residual_rms"] = fit.residual_rms;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  return j;
}

}  // namespace detail

struct ScenarioResult {
  ScenarioConfig cfg;
  Trajectory traj;
  Json metrics;
};

// run the integrator and compute the derived quantities, without touching disk
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  HilbertSpace space(cfg.params.n_fock);
  Matrix rho0 = cfg.initial_state == InitialState::exciton ? exciton_state(space)
                                                           : ground_state(space);
  EvolveOptions opts;
  opts.rel_tol = cfg.run.rel_tol;
  opts.abs_tol = cfg.run.abs_tol;
  opts.diagnostics_stride = cfg.run.diagnostics_stride;

  ScenarioResult out;
  out.cfg = cfg;
  out.traj = evolve(rho0, cfg.params, cfg.schedule, {cfg.run.t_start, cfg.run.t_end},
                    cfg.run.sample_dt, opts);
  const Trajectory& traj = out.traj;

  Json m;
  m["name"] = cfg.name;
  m["schedule_kind"] = cfg.schedule_kind;

  // emission peak, parabola-refined on the sample grid
  {
    std::size_t im = 0;
    for (std::size_t i = 0; i < traj.size(); ++i)
      if (traj.emission_rate[i] > traj.emission_rate[im]) im = i;
    double tp = traj.times[im], vp = traj.emission_rate[im];
    if (im > 0 && im + 1 < traj.size()) {
      double y0 = traj.emission_rate[im - 1], y1 = vp, y2 = traj.emission_rate[im + 1];
      double denom = y0 - 2.0 * y1 + y2;
      if (denom < 0.0) {
        double shift = 0.5 * (y0 - y2) / denom;
        tp += shift * cfg.run.sample_dt;
        vp = y1 - 0.25 * (y0 - y2) * shift;
      }
    }
    m["peak_emission_per_ns"] = vp;
    m["peak_time_ns"] = tp;
  }

  EmissionBudget budget = emission_budget(traj, cfg.params);
  m["total_cavity_emission"] = budget.cavity_emission;
  m["total_leak_emission"] = budget.leak_emission;
  m["residual_excitation"] = budget.residual;
  m["delivered_excitation"] = budget.delivered;
  m["cavity_fraction"] = budget.cavity_fraction;

  bool pumped = cfg.params.pump.amplitude > 0.0;
  std::optional<double> delta_t =
      pumped ? effective_delay(traj, cfg.params.pump.t0) : std::nullopt;
  m["effective_delta_t_ns"] = detail::json_or_null(delta_t);

  // transition-time metrics make sense only when the detuning actually swings
  std::optional<double> emission_rise, rate_rise;
  if (delta_t) {
    double w0 = pumped ? cfg.params.pump.t0 + 0.5 * cfg.params.pump.width + 0.05 : cfg.run.t_start;
    Waveform flux = emission_waveform(traj);
    if (auto r = rise_time_10_90(flux, w0, cfg.run.t_end)) emission_rise = r->duration;

    // per-exciton emission-rate coefficient kappa <n> / rho_exciton, defined
    // while the exciton still holds measurable population
    double pmax = *std::max_element(traj.pop_exciton.begin(), traj.pop_exciton.end());
    if (pmax > 0.0) {
      Waveform coeff;
      for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.pop_exciton[i] < 1e-3 * pmax) {
          if (coeff.times.empty()) continue;  // before the pump
          break;                              // tail ran out of population
        }
        coeff.times.push_back(traj.times[i]);
        coeff.intensity.push_back(traj.emission_rate[i] / traj.pop_exciton[i]);
      }
      if (coeff.times.size() >= 3)
        if (auto r = rise_time_10_90(coeff, w0, coeff.times.back())) rate_rise = r->duration;
    }
  }
  m["emission_rise_10_90_ns"] = detail::json_or_null(emission_rise);
  m["rate_rise_10_90_ns"] = detail::json_or_null(rate_rise);

  {
    Waveform flux = emission_waveform(traj);
    try {
      m["symmetry_metric"] = symmetry_metric(flux);
    } catch (const DomainError&) {
      m["symmetry_metric"] = nullptr;
    }
    try {
      GaussianFit gf = fit_gaussian(flux);
      m["gaussian_residual_rms"] = gf.residual_rms;
      Json gj = detail::fit_to_json(gf.fit);
      m["gaussian_fit"] = gj;
    } catch (const Error&) {
      m["gaussian_residual_rms"] = nullptr;
      m["gaussian_fit"] = nullptr;
    }
  }

  if (cfg.metrics.decay_window) {
    auto [w0, w1] = *cfg.metrics.decay_window;
    Waveform flux = emission_waveform(traj);
    DecayFit df = decay_rate(flux, w0, w1);
    Json dj;
    dj["rate_per_ns"] = df.rate_per_ns;
    dj["tau_ns"] = std::isfinite(df.tau_ns) ? Json(df.tau_ns) : Json(nullptr);
    dj["amplitude"] = df.amplitude;
    dj["residual_rms"] = df.fit.residual_rms;
    dj["converged"] = df.fit.converged;
    dj["window_ns"] = Json::array({w0, w1});
    m["decay_fit"] = dj;
  } else {
    m["decay_fit"] = nullptr;
  }

  Json health;
  health["max_trace_error"] = traj.max_trace_error;
  health["max_hermiticity_error"] = traj.max_hermiticity_error;
  health["min_eigenvalue"] = traj.min_eigenvalue_overall;
  health["max_top_fock_population"] = traj.max_top_fock_population;
  health["truncation_warning"] = traj.truncation_warning;
  m["health"] = health;

  out.metrics = std::move(m);
  return out;
}

inline Json config_echo(const ScenarioConfig& cfg) {
  Json j;
  j["name"] = cfg.name;
  j["initial_state"] = cfg.initial_state == InitialState::exciton ? "exciton" : "ground";
  Json sim;
  sim["g_rad_per_ns"] = cfg.params.g;
  sim["coupling_phase_rad"] = cfg.params.coupling_phase;
  sim["kappa_rad_per_ns"] = cfg.params.kappa_cav;
  sim["gamma_qd_rad_per_ns"] = cfg.params.gamma_qd;
  sim["gamma_relax_per_ns"] = cfg.params.gamma_relax;
  sim["omega_cav_rad_per_ns"] = cfg.params.omega_cav;
  sim["n_fock"] = cfg.params.n_fock;
  j["sim"] = sim;
  Json pump;
  pump["enabled"] = cfg.params.pump.amplitude > 0.0;
  pump["t0_ns"] = cfg.params.pump.t0;
  pump["width_ns"] = cfg.params.pump.width;
  pump["amplitude_per_ns"] = cfg.params.pump.amplitude;
  pump["excitation_probability"] = excitation_probability(cfg.params.pump);
  j["pump"] = pump;
  Json sch;
  sch["kind"] = cfg.schedule_kind;
  if (const RcSquareWave* w = cfg.schedule.rc_wave()) {
    sch["omega_a_rad_per_ns"] = w->omega_a;
    sch["omega_b_rad_per_ns"] = w->omega_b;
    sch["delta_ns"] = w->delay;
    sch["period_ns"] = w->period;
    sch["tau_rc_ns"] = w->tau_rc;
  } else if (cfg.schedule.is_constant()) {
    sch["detuning_rad_per_ns"] = cfg.schedule.detuning(0.0);
  }
  j["schedule"] = sch;
  Json run;
  run["t_start_ns"] = cfg.run.t_start;
  run["t_end_ns"] = cfg.run.t_end;
  run["sample_dt_ns"] = cfg.run.sample_dt;
  run["rel_tol"] = cfg.run.rel_tol;
  run["abs_tol"] = cfg.run.abs_tol;
  run["diagnostics_stride"] = cfg.run.diagnostics_stride;
  j["run"] = run;
  if (cfg.metrics.decay_window)
    j["metrics"] = Json{{"decay_window_ns",
                         Json::array({cfg.metrics.decay_window->first, cfg.metrics.decay_window->second})}};
  else
    j["metrics"] = Json{{"decay_window_ns", nullptr}};
  return j;
}

// run a scenario and write the requested artifacts plus the manifest
inline ScenarioResult run_simulate(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ScenarioResult res = run_scenario(cfg);
  const Trajectory& traj = res.traj;

  std::vector<std::string> written;

  if (cfg.artifacts.trajectory) {
    write_csv(out_dir / "trajectory.csv",
              {"t_ns", "pop_ground", "pop_exciton", "pop_pump", "photon_number", "emission_rate",
               "detuning_rad_per_ns", "trace_error"},
              {&traj.times, &traj.pop_ground, &traj.pop_exciton, &traj.pop_pump,
               &traj.photon_number, &traj.emission_rate, &traj.detuning, &traj.trace_error});
    written.push_back("trajectory.csv");
  }

  if (cfg.artifacts.waveform) {
    Waveform flux = emission_waveform(traj);
    std::vector<double> normalized = flux.intensity;
    double peak = *std::max_element(normalized.begin(), normalized.end());
    if (peak > 0.0)
      for (double& v : normalized) v /= peak;
    write_csv(out_dir / "waveform.csv", {"t_ns", "emission_per_ns", "normalized"},
              {&flux.times, &flux.intensity, &normalized});
    written.push_back("waveform.csv");
  }

  if (cfg.artifacts.metrics) {
    std::ofstream f(out_dir / "metrics.json", std::ios::binary);
    f << res.metrics.dump(2) << '\n';
    written.push_back("metrics.json");
  }

  if (cfg.artifacts.fits) {
    std::string text;
    if (res.metrics.contains("gaussian_fit") && !res.metrics["gaussian_fit"].is_null()) {
      text += "[gaussian]\n";
      for (auto& [k, v] : res.metrics["gaussian_fit"].items())
        text += k + " = " + v.dump() + "\n";
    }
    if (!res.metrics["decay_fit"].is_null()) {
      text += "[decay]\n";
      for (auto& [k, v] : res.metrics["decay_fit"].items())
        text += k + " = " + v.dump() + "\n";
    }
    std::ofstream f(out_dir / "fits.txt", std::ios::binary);
    f << text;
    written.push_back("fits.txt");
  }

  Json manifest;
  manifest["tool"] = Json{{"name", tool_name}, {"version", tool_version}};
  manifest["generated_at"] = detail::iso_utc_now();
  manifest["config"] = config_echo(cfg);
  Json integ;
  integ["steps_accepted"] = traj.steps_accepted;
  integ["steps_rejected"] = traj.steps_rejected;
  integ["rhs_evaluations"] = traj.rhs_evaluations;
  integ["max_trace_error"] = traj.max_trace_error;
  integ["max_hermiticity_error"] = traj.max_hermiticity_error;
  integ["min_eigenvalue"] = traj.min_eigenvalue_overall;
  integ["max_top_fock_population"] = traj.max_top_fock_population;
  integ["truncation_warning"] = traj.truncation_warning;
  manifest["integrator"] = integ;
  Json arts;
  for (const std::string& name : written) {
    std::string bytes = read_file_bytes(out_dir / name);
    arts[name] = Json{{"bytes", bytes.size()}, {"fnv1a64", fnv1a64_hex(bytes)}};
  }
  manifest["artifacts"] = arts;
  {
    std::ofstream f(out_dir / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << '\n';
  }
  return res;
}

// dense view of the schedule over its natural span: absolute line position
// (meV) and frame-relative detuning (rad/ns)
inline void run_schedule_export(const ScenarioConfig& cfg, const std::filesystem::path& out_file,
                                double sample_dt_ns) {
  if (!(sample_dt_ns > 0.0)) throw DomainError("schedule sampling step must be positive");
  auto [t0, t1] = cfg.schedule.presentation_span();
  std::vector<double> t, e_mev, det;
  std::size_t n = std::size_t(std::floor((t1 - t0) / sample_dt_ns * (1.0 + 1e-12))) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    double tt = t0 + double(k) * sample_dt_ns;
    double d = cfg.schedule.detuning(tt);
    t.push_back(tt);
    det.push_back(d);
    e_mev.push_back(rad_per_ns_to_mev(cfg.params.omega_cav + d));
  }
  if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
  write_csv(out_file, {"t_ns", "energy_mev", "detuning_rad_per_ns"}, {&t, &e_mev, &det});
}

// ---------------------------------------------------------------------------
// parameter sweep: same scenario, one dotted key stepped over a value list

struct SweepOutcome {
  std::vector<double> values;
  std::vector<std::string> run_dirs;
  std::vector<std::string> errors;  // empty string = success
};

inline SweepOutcome run_sweep(const RawConfig& base, const std::string& dotted_param,
                              const std::vector<double>& values,
                              const std::filesystem::path& out_dir, unsigned jobs = 0) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (!sweepable_parameters().count(dotted_param)) {
    throw ConfigError("'" + dotted_param + "' is not a sweepable numeric parameter");
  }
  auto dot = dotted_param.find('.');
  std::string section = dotted_param.substr(0, dot);
  std::string key = dotted_param.substr(dot + 1);

  std::filesystem::create_directories(out_dir);

  SweepOutcome outcome;
  outcome.values = values;
  outcome.run_dirs.resize(values.size());
  outcome.errors.resize(values.size());
  std::vector<Json> metrics(values.size());

  auto run_one = [&](std::size_t i) {
    char label[64];
    std::snprintf(label, sizeof label, "%03zu_%g", i, values[i]);
    std::string dir_name = label;
    for (char& c : dir_name)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-')
        c = '_';
    outcome.run_dirs[i] = dir_name;
    try {
      RawConfig raw = base;
      set_config_value(raw, section, key, format_double(values[i]));
      ScenarioConfig cfg = resolve_scenario(raw);
      ScenarioResult res = run_simulate(cfg, out_dir / dir_name);
      metrics[i] = std::move(res.metrics);
    } catch (const std::exception& e) {
      outcome.errors[i] = e.what();
    }
  };

  // independent runs; fan out across a bounded pool
  unsigned workers = jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, unsigned(values.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
      for (std::size_t i = next.fetch_add(1); i < values.size(); i = next.fetch_add(1))
        run_one(i);
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& th : pool) th.join();
  }

  // summary table: one row per value, key scalar metrics
  auto scalar = [&](std::size_t i, const char* key_name) -> double {
    if (!outcome.errors[i].empty()) return std::nan("");
    const Json& v = metrics[i].contains(key_name) ? metrics[i][key_name] : Json(nullptr);
    return v.is_number() ? v.get<double>() : std::nan("");
  };
  std::vector<double> ok(values.size());
  std::vector<double> peak(values.size()), peak_t(values.size()), cavity_frac(values.size()),
      sym(values.size()), ddt(values.size()), erise(values.size()), rrise(values.size()),
      drate(values.size());
  std::vector<double> vals = values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ok[i] = outcome.errors[i].empty() ? 1.0 : 0.0;
    peak[i] = scalar(i, "peak_emission_per_ns");
    peak_t[i] = scalar(i, "peak_time_ns");
    cavity_frac[i] = scalar(i, "cavity_fraction");
    sym[i] = scalar(i, "symmetry_metric");
    ddt[i] = scalar(i, "effective_delta_t_ns");
    erise[i] = scalar(i, "emission_rise_10_90_ns");
    rrise[i] = scalar(i, "rate_rise_10_90_ns");
    drate[i] = std::nan("");
    if (outcome.errors[i].empty() && metrics[i].contains("decay_fit") &&
        metrics[i]["decay_fit"].is_object())
      drate[i] = metrics[i]["decay_fit"]["rate_per_ns"].get<double>();
  }
  write_csv(out_dir / "summary.csv",
            {dotted_param, "ok", "peak_emission_per_ns", "peak_time_ns", "cavity_fraction",
             "symmetry_metric", "effective_delta_t_ns", "emission_rise_10_90_ns",
             "rate_rise_10_90_ns", "decay_rate_per_ns"},
            {&vals, &ok, &peak, &peak_t, &cavity_frac, &sym, &ddt, &erise, &rrise, &drate});
  return outcome;
}

// ---------------------------------------------------------------------------
// standalone fits on external data files

struct FitReport {
  std::string model;
  FitResult fit;
  Json extras;  // derived quantities (Q, bandwidth, ...)
};

inline FitReport fit_file(const std::string& model, const std::filesystem::path& data,
                          double z0 = 50.0, S11Format s11_format = S11Format::auto_detect) {
  FitReport out;
  out.model = model;
  if (model == "s11") {
    std::vector<S11Sample> samples = read_s11_file(data, s11_format);
    RcExtraction rc = extract_rc(samples, z0);
    out.fit = rc.fit;
    out.extras["r_series_ohm"] = rc.model.r_series_ohm;
    out.extras["c_junction_pf"] = rc.model.c_junction_pf;
    out.extras["z0_ohm"] = z0;
    out.extras["bandwidth_3db_ghz"] =
        bandwidth_3db_ghz(rc.model.r_series_ohm + z0, rc.model.c_junction_pf);
    return out;
  }
  auto [x, y] = read_two_columns(data);
  ModelKind kind = model_from_name(model);
  out.fit = fit_xy_model(kind, x, y);
  if (kind == ModelKind::lorentzian) {
    double center = out.fit.params[1];
    double fwhm = std::abs(out.fit.params[2]);
    if (fwhm > 0.0) {
      out.extras["q"] = center / fwhm;
      out.extras["kappa_over_2pi_ghz"] = mev_to_ghz(fwhm);
    }
  }
  if (kind == ModelKind::exponential) out.extras["rate_per_ns"] = 1.0 / out.fit.params[1];
  return out;
}

inline std::string render_fit_report(const FitReport& r) {
  std::string text;
  text += "model = " + r.model + "\n";
  text += "converged = " + std::string(r.fit.converged ? "true" : "false") + "\n";
  text += "iterations = " + std::to_string(r.fit.iterations) + "\n";
  text += "residual_rms = " + format_double(r.fit.residual_rms) + "\n";
  for (std::size_t i = 0; i < r.fit.param_names.size(); ++i) {
    text += r.fit.param_names[i] + " = " + format_double(r.fit.params[Eigen::Index(i)]);
    if (r.fit.covariance_diag)
      text += "  +- " + format_double(std::sqrt((*r.fit.covariance_diag)[Eigen::Index(i)]));
    text += "\n";
  }
  for (auto& [k, v] : r.extras.items())
    text += k + " = " + (v.is_number() ? format_double(v.get<double>()) : v.dump()) + "\n";
  return text;
}

}  // namespace qdcav
