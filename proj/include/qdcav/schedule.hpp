#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "qdcav/constants.hpp"
#include "qdcav/errors.hpp"

// Time-dependent emitter frequency: the RC-filtered square-wave drive, a
// static value, or an externally sampled trace. Everything here works in
// absolute angular frequency (rad/ns); the detuning seen by the dynamics is
// omega(t) - omega_frame with omega_frame the cavity frequency.

namespace qdcav {

// Periodic square wave sent through a single-pole RC filter. The normalized
// response f rises toward 1 during the first half period and relaxes back
// toward 0 during the second:
//   u = (t - delay) mod period
//   f(u) = 1 - C exp(-u/tau_rc)            for u in [0, period/2)
//   f(u) = C exp(-(u - period/2)/tau_rc)   for u in [period/2, period)
// with C = 1/(1 + exp(-period/(2 tau_rc))) chosen so the two branches meet
// at both junctions: 1 - C = C exp(-period/(2 tau_rc)). Exponents never
// exceed zero, so the evaluation cannot overflow for any argument.
struct RcSquareWave {
  double omega_a = 0.0;  // rad/ns, level reached as f -> 0
  double omega_b = 0.0;  // rad/ns, level reached as f -> 1
  double delay = 0.0;    // ns, phase offset of the rising switch
  double period = 0.0;   // ns
  double tau_rc = 0.0;   // ns
};

inline void validate(const RcSquareWave& w) {
  if (!(w.period > 0.0)) throw DomainError("schedule period must be positive");
  if (!(w.tau_rc > 0.0)) throw DomainError("schedule tau_rc must be positive");
  if (!std::isfinite(w.omega_a) || !std::isfinite(w.omega_b) || !std::isfinite(w.delay))
    throw DomainError("schedule parameters must be finite");
}

namespace detail {

// remainder of x mod m wrapped into [0, m)
inline double wrap(double x, double m) {
  double r = std::fmod(x, m);
  return r < 0.0 ? r + m : r;
}

}  // namespace detail

inline double normalized_response(const RcSquareWave& w, double t) {
  double u = detail::wrap(t - w.delay, w.period);
  double half = 0.5 * w.period;
  double c = 1.0 / (1.0 + std::exp(-half / w.tau_rc));
  if (u < half) return 1.0 - c * std::exp(-u / w.tau_rc);
  return c * std::exp(-(u - half) / w.tau_rc);
}

inline double eval(const RcSquareWave& w, double t) {
  return w.omega_a + (w.omega_b - w.omega_a) * normalized_response(w, t);
}

// switching instants (derivative discontinuities) strictly inside (t0, t1)
inline std::vector<double> switching_times(const RcSquareWave& w, double t0, double t1) {
  std::vector<double> out;
  if (!(t1 > t0)) return out;
  double half = 0.5 * w.period;
  double k = std::floor((t0 - w.delay) / half);
  for (double t = w.delay + k * half; t < t1; t += half)
    if (t > t0 && t < t1) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

// Quantum-confined Stark shift of the emitter line under reverse bias.
// The junction field is F = (v_bi - v)/d; the energy follows
//   E(F) = e0 + 0.1 * (p F + beta_pol * 1e-6 * F^2)   [meV, F in kV/cm]
// where 0.1 meV = 1 e nm x 1 kV/cm. beta_pol is carried in the customary
// 1e3 e nm (kV/cm)^-1 quotation, hence the 1e-6 rescale to e nm per kV/cm.
struct StarkModel {
  double e0_mev = 0.0;           // zero-field line position
  double p_e_nm = 0.0;           // permanent dipole, e nm
  double beta_pol = 0.0;         // polarizability, 1e3-convention units
  double v_bi = 1.1;             // built-in voltage, V
  double d_intrinsic_nm = 240.0; // intrinsic region thickness, nm
};

inline void validate(const StarkModel& m) {
  if (!(m.d_intrinsic_nm > 0.0)) throw DomainError("intrinsic region thickness must be positive");
  if (!std::isfinite(m.e0_mev) || !std::isfinite(m.p_e_nm) || !std::isfinite(m.beta_pol) ||
      !std::isfinite(m.v_bi))
    throw DomainError("Stark model parameters must be finite");
}

// field in kV/cm for applied bias v (volts); 1 V/nm = 1e4 kV/cm
inline double stark_field_kv_per_cm(const StarkModel& m, double v) {
  return (m.v_bi - v) / m.d_intrinsic_nm * 1e4;
}

inline double stark_energy_mev(const StarkModel& m, double v) {
  double f = stark_field_kv_per_cm(m, v);
  return m.e0_mev + 0.1 * (m.p_e_nm * f + m.beta_pol * 1e-6 * f * f);
}

// analytic dE/dV in meV/V, for finite-difference cross-checks
inline double stark_energy_slope_mev_per_v(const StarkModel& m, double v) {
  double f = stark_field_kv_per_cm(m, v);
  double dfdv = -1e4 / m.d_intrinsic_nm;
  return 0.1 * (m.p_e_nm + 2.0 * m.beta_pol * 1e-6 * f) * dfdv;
}

// ---------------------------------------------------------------------------

struct ConstantDetuning {
  double delta = 0.0;  // rad/ns relative to the rotating frame
};

// externally supplied trace of absolute emitter frequency vs time;
// linear interpolation, clamped to the end values outside the grid
struct SampledSchedule {
  std::vector<double> times;   // ns, strictly increasing
  std::vector<double> omegas;  // rad/ns
};

inline void validate(const SampledSchedule& s) {
  if (s.times.size() != s.omegas.size())
    throw DomainError("sampled schedule: time and frequency arrays differ in length");
  if (s.times.size() < 2) throw DomainError("sampled schedule needs at least two points");
  for (std::size_t i = 1; i < s.times.size(); ++i)
    if (!(s.times[i] > s.times[i - 1]))
      throw DomainError("sampled schedule times must be strictly increasing (index " +
                        std::to_string(i) + ")");
}

inline double eval(const SampledSchedule& s, double t) {
  if (t <= s.times.front()) return s.omegas.front();
  if (t >= s.times.back()) return s.omegas.back();
  auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  std::size_t hi = std::size_t(it - s.times.begin());
  std::size_t lo = hi - 1;
  double w = (t - s.times[lo]) / (s.times[hi] - s.times[lo]);
  return s.omegas[lo] + w * (s.omegas[hi] - s.omegas[lo]);
}

// Detuning seen by the dynamics. For the constant kind the payload already
// is the detuning; the other kinds carry absolute frequencies and subtract
// the frame frequency on evaluation.
class DetuningSchedule {
 public:
  DetuningSchedule() : impl_(ConstantDetuning{}) {}

  static DetuningSchedule constant(double delta_rad_per_ns) {
    DetuningSchedule s;
    s.impl_ = ConstantDetuning{delta_rad_per_ns};
    return s;
  }

  static DetuningSchedule rc_square_wave(const RcSquareWave& wave, double omega_frame) {
    validate(wave);
    DetuningSchedule s;
    RcSquareWave w = wave;
    w.delay = detail::wrap(w.delay, w.period);
    s.impl_ = w;
    s.omega_frame_ = omega_frame;
    return s;
  }

  static DetuningSchedule sampled(SampledSchedule trace, double omega_frame) {
    validate(trace);
    DetuningSchedule s;
    s.impl_ = std::move(trace);
    s.omega_frame_ = omega_frame;
    return s;
  }

  double detuning(double t) const {
    if (auto* c = std::get_if<ConstantDetuning>(&impl_)) return c->delta;
    if (auto* w = std::get_if<RcSquareWave>(&impl_)) return eval(*w, t) - omega_frame_;
    return eval(std::get<SampledSchedule>(impl_), t) - omega_frame_;
  }

  // absolute emitter frequency, rad/ns
  double omega(double t) const {
    if (auto* c = std::get_if<ConstantDetuning>(&impl_)) return omega_frame_ + c->delta;
    if (auto* w = std::get_if<RcSquareWave>(&impl_)) return eval(*w, t);
    return eval(std::get<SampledSchedule>(impl_), t);
  }

  double omega_frame() const { return omega_frame_; }

  // times in (t0, t1) where the integrator must restart: switching instants
  // of the square wave, node times of a sampled trace
  std::vector<double> breakpoints(double t0, double t1) const {
    if (auto* w = std::get_if<RcSquareWave>(&impl_)) return switching_times(*w, t0, t1);
    if (auto* s = std::get_if<SampledSchedule>(&impl_)) {
      std::vector<double> out;
      for (double t : s->times)
        if (t > t0 && t < t1) out.push_back(t);
      return out;
    }
    return {};
  }

  bool is_constant() const { return std::holds_alternative<ConstantDetuning>(impl_); }
  bool is_rc_square_wave() const { return std::holds_alternative<RcSquareWave>(impl_); }
  const RcSquareWave* rc_wave() const { return std::get_if<RcSquareWave>(&impl_); }

  // natural span for presenting the schedule: one period, the sampled
  // extent, or a 1 ns stretch for a constant
  std::pair<double, double> presentation_span() const {
    if (auto* w = std::get_if<RcSquareWave>(&impl_)) return {0.0, w->period};
    if (auto* s = std::get_if<SampledSchedule>(&impl_)) return {s->times.front(), s->times.back()};
    return {0.0, 1.0};
  }

 private:
  std::variant<ConstantDetuning, RcSquareWave, SampledSchedule> impl_;
  double omega_frame_ = 0.0;
};

}  // namespace qdcav
