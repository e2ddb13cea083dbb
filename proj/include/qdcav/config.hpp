#pragma once

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qdcav/constants.hpp"
#include "qdcav/dynamics.hpp"
#include "qdcav/errors.hpp"
#include "qdcav/io.hpp"
#include "qdcav/schedule.hpp"

// Scenario files: line-oriented "key = value" grammar with [section] headers
// and '#' comments. Unknown sections or keys are hard errors with the
// offending line, every value is validated before any physics runs, and all
// unit-bearing keys carry their unit in the name (GHz, meV, ps, ns).

namespace qdcav {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
  int value_col = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;
};

struct RawConfig {
  std::string source;  // file name or preset tag, for error messages
  std::filesystem::path base_dir;
  std::vector<ConfigSection> sections;  // first entry is the unnamed top level

  ConfigSection* find(const std::string& name) {
    for (auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
  const ConfigSection* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
};

inline RawConfig parse_config_text(const std::string& text, const std::string& source) {
  RawConfig cfg;
  cfg.source = source;
  cfg.sections.push_back(ConfigSection{"", 0, {}});
  ConfigSection* current = &cfg.sections.front();

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = line;
    if (auto hash = body.find('#'); hash != std::string::npos) body = body.substr(0, hash);
    std::string trimmed = detail::trim(body);
    if (trimmed.empty()) continue;

    if (trimmed.front() == '[') {
      auto close = trimmed.find(']');
      if (close == std::string::npos)
        throw ConfigError("unterminated section header", lineno, int(body.find('[')) + 1);
      std::string name = detail::trim(trimmed.substr(1, close - 1));
      std::string rest = detail::trim(trimmed.substr(close + 1));
      if (name.empty()) throw ConfigError("empty section name", lineno, 1);
      if (!rest.empty())
        throw ConfigError("unexpected text after section header", lineno,
                          int(body.find(']')) + 2);
      for (const auto& s : cfg.sections)
        if (s.name == name) throw ConfigError("duplicate section [" + name + "]", lineno, 1);
      cfg.sections.push_back(ConfigSection{name, lineno, {}});
      current = &cfg.sections.back();
      continue;
    }

    auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", lineno, 1);
    std::string key = detail::trim(body.substr(0, eq));
    std::string value = detail::trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", lineno, 1);
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", lineno, int(eq) + 2);
    for (const auto& e : current->entries)
      if (e.key == key)
        throw ConfigError("duplicate key '" + key + "' in section [" + current->name + "]", lineno,
                          1);
    int vcol = int(body.find_first_not_of(" \t", eq + 1)) + 1;
    current->entries.push_back(ConfigEntry{key, value, lineno, vcol});
  }
  return cfg;
}

inline RawConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  RawConfig cfg = parse_config_text(ss.str(), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

// replace (or append) one key; used by sweeps
inline void set_config_value(RawConfig& cfg, const std::string& section, const std::string& key,
                             const std::string& value) {
  ConfigSection* s = cfg.find(section);
  if (!s) {
    cfg.sections.push_back(ConfigSection{section, 0, {}});
    s = &cfg.sections.back();
  }
  for (auto& e : s->entries)
    if (e.key == key) {
      e.value = value;
      return;
    }
  s->entries.push_back(ConfigEntry{key, value, 0, 0});
}

// dotted names a sweep may target (numeric scenario knobs)
inline const std::set<std::string>& sweepable_parameters() {
  static const std::set<std::string> names = {
      "sim.g_ghz", "sim.coupling_phase_rad", "sim.kappa_ghz", "sim.gamma_qd_ghz",
      "sim.relax_time_ps", "sim.cavity_energy_mev", "sim.n_fock",
      "pump.t0_ns", "pump.width_ps", "pump.excitation_probability", "pump.amplitude_per_ns",
      "schedule.energy_a_mev", "schedule.energy_b_mev", "schedule.delta_ns",
      "schedule.period_ns", "schedule.tau_rc_ps", "schedule.exciton_energy_mev",
      "run.t_start_ns", "run.t_end_ns", "run.sample_dt_ps", "run.rel_tol", "run.abs_tol",
      "run.diagnostics_stride",
      "metrics.decay_fit_start_ns", "metrics.decay_fit_end_ns",
  };
  return names;
}

// ---------------------------------------------------------------------------
// resolution to a runnable scenario

enum class InitialState { ground, exciton };

struct RunSettings {
  double t_start = 0.0;     // ns
  double t_end = 0.0;       // ns
  double sample_dt = 1e-3;  // ns
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  int diagnostics_stride = 10;
};

struct MetricsSettings {
  std::optional<std::pair<double, double>> decay_window;  // ns
};

struct ArtifactSet {
  bool trajectory = true;
  bool waveform = true;
  bool metrics = true;
  bool fits = false;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SimParams params;
  InitialState initial_state = InitialState::ground;
  DetuningSchedule schedule;
  std::string schedule_kind = "constant";
  RunSettings run;
  MetricsSettings metrics;
  ArtifactSet artifacts;
};

namespace detail {

struct EntryReader {
  const ConfigSection* section;
  std::set<std::string> consumed;

  const ConfigEntry* find(const std::string& key) {
    if (!section) return nullptr;
    for (const auto& e : section->entries)
      if (e.key == key) {
        consumed.insert(key);
        return &e;
      }
    return nullptr;
  }

  void reject_unknown(const std::string& section_name) const {
    if (!section) return;
    for (const auto& e : section->entries)
      if (!consumed.count(e.key))
        throw ConfigError("unknown key '" + section_name + "." + e.key + "'", e.line, 1);
  }
};

inline double entry_double(const ConfigEntry& e) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || p != e.value.data() + e.value.size())
    throw ConfigError("value of '" + e.key + "' is not a number: '" + e.value + "'", e.line,
                      e.value_col);
  return v;
}

inline int entry_int(const ConfigEntry& e) {
  int v = 0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || p != e.value.data() + e.value.size())
    throw ConfigError("value of '" + e.key + "' is not an integer: '" + e.value + "'", e.line,
                      e.value_col);
  return v;
}

inline bool entry_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw ConfigError("value of '" + e.key + "' is not a boolean: '" + e.value + "'", e.line,
                    e.value_col);
}

}  // namespace detail

inline ScenarioConfig resolve_scenario(const RawConfig& raw) {
  static const std::set<std::string> known_sections = {"",       "sim",     "pump",
                                                       "schedule", "run",   "metrics", "outputs"};
  for (const auto& s : raw.sections)
    if (!known_sections.count(s.name))
      throw ConfigError("unknown section [" + s.name + "]", s.line, 1);

  ScenarioConfig out;

  {
    detail::EntryReader top{raw.find(""), {}};
    if (const auto* e = top.find("name")) out.name = e->value;
    top.reject_unknown("(top level)");
  }

  double cavity_energy_mev = 978.02;
  {
    detail::EntryReader sim{raw.find("sim"), {}};
    if (const auto* e = sim.find("g_ghz")) {
      double v = detail::entry_double(*e);
      if (v < 0.0) throw ConfigError("sim.g_ghz must be >= 0", e->line, e->value_col);
      out.params.g = ghz_to_rad_per_ns(v);
    }
    if (const auto* e = sim.find("coupling_phase_rad"))
      out.params.coupling_phase = detail::entry_double(*e);
    if (const auto* e = sim.find("kappa_ghz")) {
      double v = detail::entry_double(*e);
      if (v < 0.0) throw ConfigError("sim.kappa_ghz must be >= 0", e->line, e->value_col);
      out.params.kappa_cav = ghz_to_rad_per_ns(v);
    }
    if (const auto* e = sim.find("gamma_qd_ghz")) {
      double v = detail::entry_double(*e);
      if (v < 0.0) throw ConfigError("sim.gamma_qd_ghz must be >= 0", e->line, e->value_col);
      out.params.gamma_qd = ghz_to_rad_per_ns(v);
    }
    if (const auto* e = sim.find("relax_time_ps")) {
      double v = detail::entry_double(*e);
      if (!(v > 0.0)) throw ConfigError("sim.relax_time_ps must be > 0", e->line, e->value_col);
      out.params.gamma_relax = 1.0 / ps_to_ns(v);
    }
    if (const auto* e = sim.find("n_fock")) {
      int v = detail::entry_int(*e);
      if (v < 1) throw ConfigError("sim.n_fock must be >= 1", e->line, e->value_col);
      out.params.n_fock = v;
    }
    if (const auto* e = sim.find("cavity_energy_mev")) {
      double v = detail::entry_double(*e);
      if (!(v > 0.0)) throw ConfigError("sim.cavity_energy_mev must be > 0", e->line, e->value_col);
      cavity_energy_mev = v;
    }
    if (const auto* e = sim.find("initial_state")) {
      if (e->value == "ground") out.initial_state = InitialState::ground;
      else if (e->value == "exciton") out.initial_state = InitialState::exciton;
      else
        throw ConfigError("sim.initial_state must be 'ground' or 'exciton', got '" + e->value + "'",
                          e->line, e->value_col);
    }
    sim.reject_unknown("sim");
  }
  out.params.omega_cav = mev_to_rad_per_ns(cavity_energy_mev);

  {
    detail::EntryReader pump{raw.find("pump"), {}};
    bool enabled = false;
    if (const auto* e = pump.find("enabled")) enabled = detail::entry_bool(*e);
    double t0 = 0.0, width_ns = 0.07;
    const auto* e_t0 = pump.find("t0_ns");
    if (e_t0) t0 = detail::entry_double(*e_t0);
    if (const auto* e = pump.find("width_ps")) {
      double v = detail::entry_double(*e);
      if (!(v > 0.0)) throw ConfigError("pump.width_ps must be > 0", e->line, e->value_col);
      width_ns = ps_to_ns(v);
    }
    const auto* e_prob = pump.find("excitation_probability");
    const auto* e_amp = pump.find("amplitude_per_ns");
    if (e_prob && e_amp)
      throw ConfigError("pump: give excitation_probability or amplitude_per_ns, not both",
                        e_amp->line, 1);
    pump.reject_unknown("pump");

    if (enabled) {
      if (!e_t0) throw ConfigError("pump.t0_ns is required when the pump is enabled",
                                   raw.find("pump") ? raw.find("pump")->line : 0);
      if (e_amp) {
        double v = detail::entry_double(*e_amp);
        if (v < 0.0) throw ConfigError("pump.amplitude_per_ns must be >= 0", e_amp->line,
                                       e_amp->value_col);
        out.params.pump.t0 = t0;
        out.params.pump.width = width_ns;
        out.params.pump.amplitude = v;
      } else {
        double p = e_prob ? detail::entry_double(*e_prob) : 0.5;
        if (e_prob && (p < 0.0 || p >= 1.0))
          throw ConfigError("pump.excitation_probability must lie in [0, 1)", e_prob->line,
                            e_prob->value_col);
        out.params.pump = PumpProfile::from_probability(t0, width_ns, p);
      }
    } else {
      out.params.pump = PumpProfile{};
      out.params.pump.width = width_ns;
      out.params.pump.amplitude = 0.0;
    }
  }

  {
    const ConfigSection* sec = raw.find("schedule");
    if (!sec) throw ConfigError("missing [schedule] section");
    detail::EntryReader sch{sec, {}};
    const auto* e_kind = sch.find("kind");
    if (!e_kind) throw ConfigError("schedule.kind is required", sec->line);
    out.schedule_kind = e_kind->value;

    auto require = [&](const char* key) -> const ConfigEntry* {
      const auto* e = sch.find(key);
      if (!e)
        throw ConfigError("schedule." + std::string(key) + " is required for kind '" +
                              e_kind->value + "'",
                          sec->line);
      return e;
    };

    if (e_kind->value == "constant") {
      double e_mev = detail::entry_double(*require("exciton_energy_mev"));
      out.schedule =
          DetuningSchedule::constant(mev_to_rad_per_ns(e_mev) - out.params.omega_cav);
    } else if (e_kind->value == "rc_square_wave") {
      RcSquareWave w;
      w.omega_a = mev_to_rad_per_ns(detail::entry_double(*require("energy_a_mev")));
      w.omega_b = mev_to_rad_per_ns(detail::entry_double(*require("energy_b_mev")));
      const auto* e_T = require("period_ns");
      w.period = detail::entry_double(*e_T);
      if (!(w.period > 0.0))
        throw ConfigError("schedule.period_ns must be > 0", e_T->line, e_T->value_col);
      const auto* e_tau = require("tau_rc_ps");
      w.tau_rc = ps_to_ns(detail::entry_double(*e_tau));
      if (!(w.tau_rc > 0.0))
        throw ConfigError("schedule.tau_rc_ps must be > 0", e_tau->line, e_tau->value_col);
      if (const auto* e = sch.find("delta_ns")) w.delay = detail::entry_double(*e);
      out.schedule = DetuningSchedule::rc_square_wave(w, out.params.omega_cav);
    } else if (e_kind->value == "sampled") {
      const auto* e_file = require("file");
      std::filesystem::path p = e_file->value;
      if (p.is_relative() && !raw.base_dir.empty()) p = raw.base_dir / p;
      auto [times, energies] = read_two_columns(p);
      SampledSchedule s;
      s.times = times;
      s.omegas.reserve(energies.size());
      for (double e_mev : energies) s.omegas.push_back(mev_to_rad_per_ns(e_mev));
      try {
        out.schedule = DetuningSchedule::sampled(std::move(s), out.params.omega_cav);
      } catch (const DomainError& err) {
        throw ConfigError(std::string("schedule file '") + e_file->value + "': " + err.what(),
                          e_file->line, e_file->value_col);
      }
    } else {
      throw ConfigError("schedule.kind must be constant, rc_square_wave or sampled, got '" +
                            e_kind->value + "'",
                        e_kind->line, e_kind->value_col);
    }
    sch.reject_unknown("schedule");
  }

  {
    const ConfigSection* sec = raw.find("run");
    if (!sec) throw ConfigError("missing [run] section");
    detail::EntryReader run{sec, {}};
    if (const auto* e = run.find("t_start_ns")) out.run.t_start = detail::entry_double(*e);
    const auto* e_end = run.find("t_end_ns");
    if (!e_end) throw ConfigError("run.t_end_ns is required", sec->line);
    out.run.t_end = detail::entry_double(*e_end);
    if (!(out.run.t_end > out.run.t_start))
      throw ConfigError("run.t_end_ns must exceed run.t_start_ns", e_end->line, e_end->value_col);
    if (const auto* e = run.find("sample_dt_ps")) {
      double v = detail::entry_double(*e);
      if (!(v > 0.0)) throw ConfigError("run.sample_dt_ps must be > 0", e->line, e->value_col);
      out.run.sample_dt = ps_to_ns(v);
    }
    if (const auto* e = run.find("rel_tol")) {
      out.run.rel_tol = detail::entry_double(*e);
      if (!(out.run.rel_tol > 0.0))
        throw ConfigError("run.rel_tol must be > 0", e->line, e->value_col);
    }
    if (const auto* e = run.find("abs_tol")) {
      out.run.abs_tol = detail::entry_double(*e);
      if (!(out.run.abs_tol > 0.0))
        throw ConfigError("run.abs_tol must be > 0", e->line, e->value_col);
    }
    if (const auto* e = run.find("diagnostics_stride")) {
      out.run.diagnostics_stride = detail::entry_int(*e);
      if (out.run.diagnostics_stride < 1)
        throw ConfigError("run.diagnostics_stride must be >= 1", e->line, e->value_col);
    }
    run.reject_unknown("run");
  }

  {
    detail::EntryReader met{raw.find("metrics"), {}};
    const auto* e0 = met.find("decay_fit_start_ns");
    const auto* e1 = met.find("decay_fit_end_ns");
    if (bool(e0) != bool(e1))
      throw ConfigError("metrics.decay_fit_start_ns and decay_fit_end_ns must be given together",
                        (e0 ? e0 : e1)->line);
    if (e0 && e1) {
      double a = detail::entry_double(*e0), b = detail::entry_double(*e1);
      if (!(b > a)) throw ConfigError("metrics decay window must be increasing", e1->line,
                                      e1->value_col);
      out.metrics.decay_window = {a, b};
    }
    met.reject_unknown("metrics");
  }

  {
    detail::EntryReader outs{raw.find("outputs"), {}};
    if (const auto* e = outs.find("artifacts")) {
      out.artifacts = ArtifactSet{false, false, false, false};
      std::string v = e->value;
      std::size_t pos = 0;
      while (pos < v.size()) {
        auto comma = v.find(',', pos);
        std::string item = detail::trim(v.substr(pos, comma == std::string::npos ? v.npos : comma - pos));
        if (item == "trajectory") out.artifacts.trajectory = true;
        else if (item == "waveform") out.artifacts.waveform = true;
        else if (item == "metrics") out.artifacts.metrics = true;
        else if (item == "fits") out.artifacts.fits = true;
        else if (!item.empty())
          throw ConfigError("unknown artifact '" + item + "'", e->line, e->value_col);
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
    outs.reject_unknown("outputs");
  }

  validate(out.params);
  return out;
}

inline ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  return resolve_scenario(parse_config_file(path));
}

}  // namespace qdcav
