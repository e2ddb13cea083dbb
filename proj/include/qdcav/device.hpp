#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qdcav/analysis.hpp"
#include "qdcav/constants.hpp"
#include "qdcav/errors.hpp"
#include "qdcav/nlls.hpp"

// Lumped-element electrical picture of the tuning diode: series resistance
// plus junction capacitance, its reflection coefficient, the RC bandwidth,
// and the optical quality-factor bookkeeping.

namespace qdcav {

struct DiodeModel {
  double r_series_ohm = 0.0;
  double c_junction_pf = 0.0;
};

inline void validate(const DiodeModel& m) {
  if (!(m.r_series_ohm >= 0.0) || !std::isfinite(m.r_series_ohm))
    throw DomainError("series resistance must be finite and >= 0");
  if (!(m.c_junction_pf > 0.0)) throw DomainError("junction capacitance must be positive");
}

// series RC impedance in ohm; f in GHz, C in pF, so 1/(2 pi f C) = 1e3/(2 pi f_GHz C_pF)
inline Complex impedance_ohm(const DiodeModel& m, double f_ghz) {
  validate(m);
  if (!(f_ghz > 0.0)) throw DomainError("frequency must be positive");
  return Complex(m.r_series_ohm, -1e3 / (two_pi * f_ghz * m.c_junction_pf));
}

inline Complex s11(Complex z, double z0 = 50.0) {
  if (!(z0 > 0.0)) throw DomainError("reference impedance must be positive");
  return (z - z0) / (z + z0);
}

inline Complex s11_of(const DiodeModel& m, double f_ghz, double z0 = 50.0) {
  return s11(impedance_ohm(m, f_ghz), z0);
}

// single-pole cutoff f = 1/(2 pi R C) in GHz, with R the full loop resistance
// (series + source)
inline double bandwidth_3db_ghz(double r_total_ohm, double c_pf) {
  if (!(r_total_ohm > 0.0) || !(c_pf > 0.0)) throw DomainError("R and C must be positive");
  return 1e3 / (two_pi * r_total_ohm * c_pf);
}

// parallel combination of loss channels: 1/Q_tot = 1/Q_rad + 1/Q_abs
inline double q_total(double q_rad, double q_abs) {
  if (!(q_rad > 0.0) || !(q_abs > 0.0)) throw DomainError("quality factors must be positive");
  return 1.0 / (1.0 / q_rad + 1.0 / q_abs);
}

// ---------------------------------------------------------------------------
// reflection-data fit

struct S11Sample {
  double f_ghz = 0.0;
  Complex value;
};

struct RcExtraction {
  DiodeModel model;
  FitResult fit;
};

// recover R and C from complex reflection samples by least squares on the
// stacked real and imaginary parts
inline RcExtraction extract_rc(const std::vector<S11Sample>& samples, double z0 = 50.0) {
  if (samples.size() < 2)
    throw DomainError("need reflection data at two or more frequencies to separate R and C");
  if (!(z0 > 0.0)) throw DomainError("reference impedance must be positive");
  for (const auto& s : samples)
    if (!(s.f_ghz > 0.0)) throw DomainError("reflection sample frequencies must be positive");
  bool distinct = false;
  for (std::size_t i = 1; i < samples.size() && !distinct; ++i)
    distinct = samples[i].f_ghz != samples[0].f_ghz;
  if (!distinct)
    throw RankDeficiencyError("reflection samples must span at least two distinct frequencies");

  // initial guesses: R from the high-frequency limit where Z -> R,
  // C from the low-frequency reactance
  const auto& hi = samples.back();
  double re = hi.value.real();
  double r0 = z0 * (1.0 + re) / std::max(1.0 - re, 1e-3);
  r0 = std::clamp(r0, 1.0, 1e4);
  const auto& lo = samples.front();
  Complex z_lo = z0 * (Complex(1.0, 0.0) + lo.value) / (Complex(1.0, 0.0) - lo.value);
  double x = -z_lo.imag();
  double c0 = x > 1e-9 ? 1e3 / (two_pi * lo.f_ghz * x) : 0.3;
  c0 = std::clamp(c0, 1e-4, 1e3);

  ResidualFn residuals = [&samples, z0](const Vector& p) {
    Vector r(Eigen::Index(2 * samples.size()));
    DiodeModel m{std::abs(p[0]), std::abs(p[1])};
    for (std::size_t i = 0; i < samples.size(); ++i) {
      Complex model = s11_of(m, samples[i].f_ghz, z0);
      r[Eigen::Index(2 * i)] = model.real() - samples[i].value.real();
      r[Eigen::Index(2 * i + 1)] = model.imag() - samples[i].value.imag();
    }
    return r;
  };

  double scale = 0.0;
  for (const auto& s : samples) scale = std::max(scale, std::abs(s.value));
  FitOptions opt;
  opt.normalization = scale > 0.0 ? scale : 1.0;
  Vector init(2);
  init << r0, c0;

  RcExtraction out;
  out.fit = nlls_fit(residuals, {"r_series_ohm", "c_junction_pf"}, init, opt);
  out.model.r_series_ohm = std::abs(out.fit.params[0]);
  out.model.c_junction_pf = std::abs(out.fit.params[1]);
  return out;
}

// ---------------------------------------------------------------------------
// optical linewidth fit

struct LorentzianQ {
  double q = 0.0;
  double center_mev = 0.0;
  double fwhm_mev = 0.0;
  double kappa_rad_per_ns = 0.0;   // FWHM as an angular loss rate
  double kappa_over_2pi_ghz = 0.0; // same, quoted as a frequency
  FitResult fit;
};

// Q = E / Gamma from a Lorentzian fit of a spectral line
inline LorentzianQ lorentzian_q(const std::vector<double>& energies_mev,
                                const std::vector<double>& counts) {
  LorentzianQ out;
  out.fit = fit_xy_model(ModelKind::lorentzian, energies_mev, counts);
  out.center_mev = out.fit.params[1];
  out.fwhm_mev = std::abs(out.fit.params[2]);
  if (!(out.fwhm_mev > 0.0)) throw DomainError("fitted linewidth is not positive");
  out.q = out.center_mev / out.fwhm_mev;
  out.kappa_rad_per_ns = mev_to_rad_per_ns(out.fwhm_mev);
  out.kappa_over_2pi_ghz = mev_to_ghz(out.fwhm_mev);
  return out;
}

}  // namespace qdcav
