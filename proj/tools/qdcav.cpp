#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdcav/run.hpp"

// qdcav: cavity-QED emitter simulator and analysis front end.
//
// exit codes
//   0  success
//   2  configuration or usage error
//   3  integrator failure (step size collapse, step budget)
//   4  state health violation (trace/hermiticity/positivity)
//   5  fit did not converge
//   1  anything unexpected

namespace {

namespace fs = std::filesystem;
using namespace qdcav;

// --config FILE and --preset NAME are the two ways to name a scenario
struct ScenarioSource {
  std::string config_path;
  std::string preset_name;

  RawConfig load() const {
    if (!config_path.empty() && !preset_name.empty())
      throw ConfigError("pass either --config or --preset, not both");
    if (!config_path.empty()) return parse_config_file(config_path);
    if (!preset_name.empty()) return preset_config(preset_name);
    throw ConfigError("a scenario is required: pass --config FILE or --preset NAME");
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario config file (INI)");
    cmd->add_option("--preset", preset_name, "named built-in scenario (see 'qdcav presets')");
  }
};

void apply_overrides(ScenarioConfig& cfg, double sample_dt_ps) {
  if (sample_dt_ps > 0.0) cfg.run.sample_dt = ps_to_ns(sample_dt_ps);
}

int cmd_simulate(const ScenarioSource& src, std::string out_dir, double sample_dt_ps) {
  ScenarioConfig cfg = resolve_scenario(src.load());
  apply_overrides(cfg, sample_dt_ps);
  if (out_dir.empty()) out_dir = (fs::path("runs") / cfg.name).string();
  ScenarioResult res = run_simulate(cfg, out_dir);
  std::printf("scenario       %s\n", cfg.name.c_str());
  std::printf("span           [%g, %g] ns, %zu samples\n", cfg.run.t_start, cfg.run.t_end,
              res.traj.size());
  std::printf("steps          %zu accepted, %zu rejected\n", res.traj.steps_accepted,
              res.traj.steps_rejected);
  std::printf("peak emission  %g /ns at t = %g ns\n",
              res.metrics["peak_emission_per_ns"].get<double>(),
              res.metrics["peak_time_ns"].get<double>());
  std::printf("cavity yield   %g (fraction %g)\n",
              res.metrics["total_cavity_emission"].get<double>(),
              res.metrics["cavity_fraction"].get<double>());
  if (res.traj.truncation_warning)
    std::fprintf(stderr,
                 "warning: top Fock level population reached %g; raise sim.n_fock\n",
                 res.traj.max_top_fock_population);
  std::printf("artifacts      %s\n", out_dir.c_str());
  return 0;
}

int cmd_schedule(const ScenarioSource& src, std::string out_file, double sample_dt_ps) {
  ScenarioConfig cfg = resolve_scenario(src.load());
  if (out_file.empty()) out_file = cfg.name + "_schedule.csv";
  double dt = sample_dt_ps > 0.0 ? ps_to_ns(sample_dt_ps) : 1e-3;
  run_schedule_export(cfg, out_file, dt);
  std::printf("schedule kind  %s\n", cfg.schedule_kind.c_str());
  std::printf("wrote          %s\n", out_file.c_str());
  return 0;
}

int cmd_sweep(const ScenarioSource& src, const std::string& param,
              const std::vector<double>& values, std::string out_dir, unsigned jobs) {
  RawConfig base = src.load();
  if (out_dir.empty()) out_dir = "sweep";
  SweepOutcome sw = run_sweep(base, param, values, out_dir, jobs);
  int failures = 0;
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    if (sw.errors[i].empty()) {
      std::printf("%-16s %s = %g ok\n", sw.run_dirs[i].c_str(), param.c_str(), sw.values[i]);
    } else {
      ++failures;
      std::printf("%-16s %s = %g FAILED: %s\n", sw.run_dirs[i].c_str(), param.c_str(),
                  sw.values[i], sw.errors[i].c_str());
    }
  }
  std::printf("summary        %s\n", (fs::path(out_dir) / "summary.csv").string().c_str());
  if (failures) {
    std::fprintf(stderr, "%d of %zu sweep points failed\n", failures, sw.values.size());
    return 1;
  }
  return 0;
}

int cmd_fit(const std::string& model, const std::string& data_path, double z0,
            const std::string& s11_format_name, std::string out_file) {
  S11Format fmt = S11Format::auto_detect;
  if (s11_format_name == "reim")
    fmt = S11Format::re_im;
  else if (s11_format_name == "magphase")
    fmt = S11Format::mag_phase;
  else if (s11_format_name != "auto")
    throw ConfigError("unknown --s11-format '" + s11_format_name + "' (auto, reim, magphase)");

  FitReport report = fit_file(model, data_path, z0, fmt);
  std::string text = render_fit_report(report);
  std::fputs(text.c_str(), stdout);
  if (out_file.empty()) out_file = data_path + ".fit.txt";
  {
    std::ofstream f(out_file, std::ios::binary);
    f << text;
  }
  std::printf("wrote          %s\n", out_file.c_str());
  if (!report.fit.converged) {
    std::fprintf(stderr, "fit did not converge after %d iterations\n", report.fit.iterations);
    return 5;
  }
  return 0;
}

int cmd_presets(const std::string& show) {
  if (!show.empty()) {
    std::fputs(preset_info(show).text, stdout);
    return 0;
  }
  for (const PresetInfo& p : presets())
    std::printf("%-22s %s\n", p.name, p.summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum-dot cavity emitter simulator and analysis toolkit"};
  app.set_version_flag("--version", std::string(qdcav::tool_name) + " " + qdcav::tool_version);
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "integrate a scenario and write artifacts");
  ScenarioSource sim_src;
  sim_src.attach(sim);
  std::string sim_out;
  double sim_dt_ps = 0.0;
  bool seedless = false;
  sim->add_option("--out", sim_out, "output directory (default runs/<name>)");
  sim->add_option("--sample-dt", sim_dt_ps, "sample spacing override in ps");
  sim->add_flag("--seedless", seedless,
                "accepted for interface parity; the integration is deterministic");

  // schedule
  auto* sch = app.add_subcommand("schedule", "export the detuning schedule as CSV");
  ScenarioSource sch_src;
  sch_src.attach(sch);
  std::string sch_out;
  double sch_dt_ps = 0.0;
  sch->add_option("--out", sch_out, "output CSV path (default <name>_schedule.csv)");
  sch->add_option("--sample-dt", sch_dt_ps, "sample spacing in ps (default 1)");

  // sweep
  auto* swp = app.add_subcommand("sweep", "re-run a scenario over a list of parameter values");
  ScenarioSource swp_src;
  swp_src.attach(swp);
  std::string swp_param, swp_out;
  std::vector<double> swp_values;
  unsigned swp_jobs = 0;
  swp->add_option("--param", swp_param, "dotted config key, e.g. schedule.tau_rc_ps")
      ->required();
  swp->add_option("--values", swp_values, "comma-separated numeric values")
      ->required()
      ->delimiter(',');
  swp->add_option("--out", swp_out, "output directory (default sweep/)");
  swp->add_option("--jobs", swp_jobs, "parallel workers (default: hardware threads)");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a model to a two-column data file");
  std::string fit_model, fit_data, fit_out, fit_s11_format = "auto";
  double fit_z0 = 50.0;
  fit->add_option("model", fit_model, "line, exp, biexp, lorentzian, gaussian, or s11")
      ->required();
  fit->add_option("data", fit_data, "data file (x y columns; s11: freq + response)")
      ->required();
  fit->add_option("--z0", fit_z0, "reference impedance in ohm for s11 (default 50)");
  fit->add_option("--s11-format", fit_s11_format, "s11 column layout: auto, reim, magphase");
  fit->add_option("--out", fit_out, "report path (default <data>.fit.txt)");

  // presets
  auto* pre = app.add_subcommand("presets", "list built-in scenarios");
  std::string pre_show;
  pre->add_option("--show", pre_show, "print the full config text of one preset");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(sim_src, sim_out, sim_dt_ps);
    if (sch->parsed()) return cmd_schedule(sch_src, sch_out, sch_dt_ps);
    if (swp->parsed()) return cmd_sweep(swp_src, swp_param, swp_values, swp_out, swp_jobs);
    if (fit->parsed()) return cmd_fit(fit_model, fit_data, fit_z0, fit_s11_format, fit_out);
    if (pre->parsed()) return cmd_presets(pre_show);
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const qdcav::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const qdcav::IntegrationError& e) {
    std::fprintf(stderr, "integration error: %s\n", e.what());
    return 3;
  } catch (const qdcav::HealthError& e) {
    std::fprintf(stderr, "state health error: %s\n", e.what());
    return 4;
  } catch (const qdcav::RankDeficiencyError& e) {
    std::fprintf(stderr, "fit error: %s\n", e.what());
    return 5;
  } catch (const qdcav::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
