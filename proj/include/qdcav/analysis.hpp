#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qdcav/dynamics.hpp"
#include "qdcav/errors.hpp"
#include "qdcav/nlls.hpp"

// Observable post-processing: emission waveforms, lifetime fits, pulse-shape
// metrics and the small stable of parametric models the CLI exposes.

namespace qdcav {

struct Waveform {
  std::vector<double> times;      // ns
  std::vector<double> intensity;  // photons/ns (or arbitrary units once normalized)
};

inline void validate(const Waveform& w) {
  if (w.times.size() != w.intensity.size())
    throw DomainError("waveform time and intensity arrays differ in length");
  if (w.times.size() < 2) throw DomainError("waveform needs at least two samples");
  for (std::size_t i = 1; i < w.times.size(); ++i)
    if (!(w.times[i] > w.times[i - 1]))
      throw DomainError("waveform times must be strictly increasing");
}

// cavity output channel of a simulated trajectory
inline Waveform emission_waveform(const Trajectory& traj, bool normalize = false) {
  Waveform w{traj.times, traj.emission_rate};
  validate(w);
  if (normalize) {
    double peak = *std::max_element(w.intensity.begin(), w.intensity.end());
    if (!(peak > 0.0)) throw DomainError("cannot normalize an all-zero waveform");
    for (double& v : w.intensity) v /= peak;
  }
  return w;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

// ---------------------------------------------------------------------------
// lifetime-ratio figures

// F_p = tau_bulk (1/tau_on - 1/tau_off); tau_off may be +infinity
inline double purcell_factor(double tau_on, double tau_off, double tau_bulk) {
  if (!(tau_on > 0.0) || !(tau_off > 0.0) || !(tau_bulk > 0.0))
    throw DomainError("lifetimes must be positive");
  return tau_bulk * (1.0 / tau_on - 1.0 / tau_off);
}

// fraction of decay routed through the cavity: 1 - tau_on/tau_off
inline double beta_factor(double tau_on, double tau_off) {
  if (!(tau_on > 0.0) || !(tau_off > 0.0)) throw DomainError("lifetimes must be positive");
  return 1.0 - tau_on / tau_off;
}

// ---------------------------------------------------------------------------
// parametric models

enum class ModelKind { line, exponential, biexponential, lorentzian, gaussian };

inline ModelKind model_from_name(const std::string& name) {
  if (name == "line") return ModelKind::line;
  if (name == "exp") return ModelKind::exponential;
  if (name == "biexp") return ModelKind::biexponential;
  if (name == "lorentzian") return ModelKind::lorentzian;
  if (name == "gaussian") return ModelKind::gaussian;
  throw ConfigError("unknown model '" + name + "' (expected line, exp, biexp, lorentzian, gaussian)");
}

inline const char* model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::line: return "line";
    case ModelKind::exponential: return "exp";
    case ModelKind::biexponential: return "biexp";
    case ModelKind::lorentzian: return "lorentzian";
    case ModelKind::gaussian: return "gaussian";
  }
  return "?";
}

inline std::vector<std::string> model_param_names(ModelKind kind) {
  switch (kind) {
    case ModelKind::line: return {"slope", "intercept"};
    case ModelKind::exponential: return {"amplitude", "tau"};
    case ModelKind::biexponential: return {"amplitude_fast", "tau_fast", "amplitude_slow", "tau_slow"};
    case ModelKind::lorentzian: return {"amplitude", "center", "fwhm", "offset"};
    case ModelKind::gaussian: return {"amplitude", "center", "sigma"};
  }
  return {};
}

inline double model_eval(ModelKind kind, const Vector& p, double x) {
  switch (kind) {
    case ModelKind::line:
      return p[0] * x + p[1];
    case ModelKind::exponential:
      return p[0] * std::exp(-x / p[1]);
    case ModelKind::biexponential:
      return p[0] * std::exp(-x / p[1]) + p[2] * std::exp(-x / p[3]);
    case ModelKind::lorentzian: {
      double hw = 0.5 * p[2];
      double dx = x - p[1];
      return p[0] * hw * hw / (dx * dx + hw * hw) + p[3];
    }
    case ModelKind::gaussian: {
      double z = (x - p[1]) / p[2];
      return p[0] * std::exp(-0.5 * z * z);
    }
  }
  return 0.0;
}

namespace detail {

// log-linear least squares of y ~ A exp(-x/tau) over the positive samples;
// returns false when fewer than two usable points exist
inline bool log_linear(const std::vector<double>& x, const std::vector<double>& y, std::size_t lo,
                       std::size_t hi, double& amplitude, double& tau) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!(y[i] > 0.0)) continue;
    double ly = std::log(y[i]);
    sx += x[i];
    sy += ly;
    sxx += x[i] * x[i];
    sxy += x[i] * ly;
    ++n;
  }
  if (n < 2) return false;
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) return false;
  double slope = (n * sxy - sx * sy) / denom;
  double inter = (sy - slope * sx) / n;
  if (slope >= 0.0) slope = -1e-3;  // keep tau positive; the fit will move it
  tau = -1.0 / slope;
  amplitude = std::exp(inter);
  return true;
}

inline Vector model_initial_guess(ModelKind kind, const std::vector<double>& x,
                                  const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto max_it = std::max_element(y.begin(), y.end());
  auto min_it = std::min_element(y.begin(), y.end());
  double ymax = *max_it, ymin = *min_it;
  std::size_t imax = std::size_t(max_it - y.begin());
  double span = x.back() - x.front();

  switch (kind) {
    case ModelKind::line: {
      // closed-form least squares
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
      }
      double denom = double(n) * sxx - sx * sx;
      Vector p(2);
      if (denom != 0.0) {
        p[0] = (double(n) * sxy - sx * sy) / denom;
        p[1] = (sy - p[0] * sx) / double(n);
      } else {
        p[0] = 0.0;
        p[1] = sy / double(n);
      }
      return p;
    }
    case ModelKind::exponential: {
      Vector p(2);
      double a = std::max(std::abs(ymax), std::abs(ymin)), tau = std::max(span / 2.0, 1e-9);
      log_linear(x, y, 0, n, a, tau);
      p << a, tau;
      return p;
    }
    case ModelKind::biexponential: {
      double a_slow = ymax, tau_slow = std::max(span, 1e-9);
      log_linear(x, y, n - n / 3, n, a_slow, tau_slow);  // tail
      std::vector<double> early(y.begin(), y.begin() + std::ptrdiff_t(std::max<std::size_t>(n / 3, 2)));
      for (std::size_t i = 0; i < early.size(); ++i)
        early[i] -= a_slow * std::exp(-x[i] / tau_slow);
      double a_fast = std::max(ymax - a_slow, 0.1 * std::abs(ymax)),
             tau_fast = std::max(span / 10.0, 1e-9);
      log_linear(x, early, 0, early.size(), a_fast, tau_fast);
      Vector p(4);
      p << a_fast, tau_fast, a_slow, tau_slow;
      return p;
    }
    case ModelKind::lorentzian: {
      double offset = ymin;
      double amp = ymax - ymin;
      double center = x[imax];
      double half = offset + 0.5 * amp;
      double left = x.front(), right = x.back();
      for (std::size_t i = imax; i-- > 0;)
        if (y[i] <= half) {
          left = x[i];
          break;
        }
      for (std::size_t i = imax + 1; i < n; ++i)
        if (y[i] <= half) {
          right = x[i];
          break;
        }
      double fwhm = right - left;
      if (!(fwhm > 0.0)) fwhm = span / 10.0;
      Vector p(4);
      p << amp, center, fwhm, offset;
      return p;
    }
    case ModelKind::gaussian: {
      double amp = ymax;
      double center = x[imax];
      double half = 0.5 * amp;
      double left = x.front(), right = x.back();
      bool found_left = false, found_right = false;
      for (std::size_t i = imax; i-- > 0;)
        if (y[i] <= half) {
          left = x[i];
          found_left = true;
          break;
        }
      for (std::size_t i = imax + 1; i < n; ++i)
        if (y[i] <= half) {
          right = x[i];
          found_right = true;
          break;
        }
      double fwhm;
      if (found_left && found_right) fwhm = right - left;
      else if (found_right) fwhm = 2.0 * (right - center);
      else if (found_left) fwhm = 2.0 * (center - left);
      else fwhm = span / 3.0;
      Vector p(3);
      p << amp, center, std::max(fwhm / 2.35482, 1e-9);
      return p;
    }
  }
  throw DomainError("unreachable model kind");
}

}  // namespace detail

// least-squares fit of a named model to (x, y) samples
inline FitResult fit_xy_model(ModelKind kind, const std::vector<double>& x,
                              const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("x and y arrays differ in length");
  std::size_t need = std::max<std::size_t>(2 * model_param_names(kind).size(), 5);
  if (x.size() < need)
    throw DomainError("need at least " + std::to_string(need) + " samples for this model");

  double ymax_abs = 0.0;
  for (double v : y) ymax_abs = std::max(ymax_abs, std::abs(v));

  ResidualFn residuals = [kind, &x, &y](const Vector& p) {
    Vector r(Eigen::Index(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
      r[Eigen::Index(i)] = model_eval(kind, p, x[i]) - y[i];
    return r;
  };

  FitOptions opt;
  opt.normalization = ymax_abs > 0.0 ? ymax_abs : 1.0;
  FitResult fit = nlls_fit(residuals, model_param_names(kind), detail::model_initial_guess(kind, x, y), opt);

  // report biexponential components in ascending-tau order
  if (kind == ModelKind::biexponential && fit.params[1] > fit.params[3]) {
    std::swap(fit.params[0], fit.params[2]);
    std::swap(fit.params[1], fit.params[3]);
    if (fit.covariance_diag) {
      std::swap((*fit.covariance_diag)[0], (*fit.covariance_diag)[2]);
      std::swap((*fit.covariance_diag)[1], (*fit.covariance_diag)[3]);
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// decay-rate extraction on a window of a waveform

struct DecayFit {
  double amplitude = 0.0;
  double rate_per_ns = 0.0;
  double tau_ns = std::numeric_limits<double>::infinity();
  FitResult fit;
};

// fit intensity ~ A exp(-rate t) over [w0, w1]; rate-parametrized so constant
// data lands exactly on rate = 0
inline DecayFit decay_rate(const Waveform& w, double w0, double w1) {
  validate(w);
  if (!(w1 > w0)) throw DomainError("decay window must be increasing");
  const double tol = 1e-9 * std::max(1.0, std::abs(w.times.back()));
  if (w0 < w.times.front() - tol || w1 > w.times.back() + tol)
    throw DomainError("decay window lies outside the waveform");

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < w.times.size(); ++i)
    if (w.times[i] >= w0 - tol && w.times[i] <= w1 + tol) {
      xs.push_back(w.times[i]);
      ys.push_back(w.intensity[i]);
    }
  if (xs.size() < 3) throw DomainError("decay window contains fewer than three samples");
  for (double v : ys)
    if (!(v > 0.0)) throw DomainError("decay window contains non-positive intensity");

  double r0 = 0.0;
  if (ys.front() != ys.back()) r0 = std::log(ys.front() / ys.back()) / (xs.back() - xs.front());
  double a0 = ys.front() * std::exp(r0 * xs.front());

  ResidualFn residuals = [&xs, &ys](const Vector& p) {
    Vector r(Eigen::Index(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
      r[Eigen::Index(i)] = p[0] * std::exp(-p[1] * xs[i]) - ys[i];
    return r;
  };
  FitOptions opt;
  opt.normalization = *std::max_element(ys.begin(), ys.end());
  Vector init(2);
  init << a0, r0;
  DecayFit out;
  out.fit = nlls_fit(residuals, {"amplitude", "rate_per_ns"}, init, opt);
  out.amplitude = out.fit.params[0];
  out.rate_per_ns = out.fit.params[1];
  out.tau_ns = out.rate_per_ns > 0.0 ? 1.0 / out.rate_per_ns
                                     : std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------
// pulse-shape metrics

// Overlap of the waveform with its mirror image about the peak:
//   integral I(t) I(2 t_p - t) dt / integral I(t)^2 dt
// The peak position is refined with a three-point parabola; the mirrored
// signal is linearly interpolated and zero outside the grid. 1 = perfectly
// symmetric pulse.
inline double symmetry_metric(const Waveform& w) {
  validate(w);
  const auto& t = w.times;
  const auto& yv = w.intensity;
  const std::size_t n = t.size();

  std::size_t m = std::size_t(std::max_element(yv.begin(), yv.end()) - yv.begin());
  double t_peak = t[m];
  if (m > 0 && m + 1 < n) {
    // vertex of the parabola through the three points around the maximum
    double x0 = t[m - 1], x1 = t[m], x2 = t[m + 1];
    double y0 = yv[m - 1], y1 = yv[m], y2 = yv[m + 1];
    double d0 = (y1 - y0) / (x1 - x0);
    double d1 = (y2 - y1) / (x2 - x1);
    double curv = (d1 - d0) / (x2 - x0);
    if (curv < 0.0) {
      double vertex = 0.5 * (x0 + x1 - d0 / curv);
      if (vertex >= x0 && vertex <= x2) t_peak = vertex;
    }
  }

  auto interp = [&](double tt) -> double {
    if (tt < t.front() || tt > t.back()) return 0.0;
    auto it = std::upper_bound(t.begin(), t.end(), tt);
    if (it == t.begin()) return yv.front();
    if (it == t.end()) return yv.back();
    std::size_t hi = std::size_t(it - t.begin());
    std::size_t lo = hi - 1;
    double f = (tt - t[lo]) / (t[hi] - t[lo]);
    return yv[lo] + f * (yv[hi] - yv[lo]);
  };

  std::vector<double> cross(n), self(n);
  for (std::size_t i = 0; i < n; ++i) {
    cross[i] = yv[i] * interp(2.0 * t_peak - t[i]);
    self[i] = yv[i] * yv[i];
  }
  double den = trapezoid(t, self);
  if (!(den > 0.0)) throw DomainError("waveform carries no power");
  return trapezoid(t, cross) / den;
}

struct GaussianFit {
  double amplitude = 0.0;
  double center_ns = 0.0;
  double sigma_ns = 0.0;
  double residual_rms = 0.0;
  FitResult fit;
};

inline GaussianFit fit_gaussian(const Waveform& w) {
  validate(w);
  GaussianFit out;
  out.fit = fit_xy_model(ModelKind::gaussian, w.times, w.intensity);
  out.amplitude = out.fit.params[0];
  out.center_ns = out.fit.params[1];
  out.sigma_ns = std::abs(out.fit.params[2]);
  out.residual_rms = out.fit.residual_rms;
  return out;
}

struct RiseTime {
  double t10 = 0.0;
  double t90 = 0.0;
  double duration = 0.0;
};

// 10%-90% rise of a step-like signal inside [t_lo, t_hi]: levels are the
// window maximum and the minimum seen before it; crossings are linearly
// interpolated. Returns nothing when the window holds no usable step.
inline std::optional<RiseTime> rise_time_10_90(const Waveform& w, double t_lo, double t_hi) {
  validate(w);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < w.times.size(); ++i)
    if (w.times[i] >= t_lo && w.times[i] <= t_hi) idx.push_back(i);
  if (idx.size() < 3) return std::nullopt;

  std::size_t im = idx[0];
  for (std::size_t i : idx)
    if (w.intensity[i] > w.intensity[im]) im = i;
  double hi = w.intensity[im];
  std::size_t ilo = idx[0];
  for (std::size_t i : idx) {
    if (i > im) break;
    if (w.intensity[i] < w.intensity[ilo]) ilo = i;
  }
  double lo = w.intensity[ilo];
  double swing = hi - lo;
  if (!(swing > 0.0) || im <= idx[0]) return std::nullopt;

  double v10 = lo + 0.1 * swing, v90 = lo + 0.9 * swing;
  auto cross_time = [&](std::size_t i, double level) {
    double f = (level - w.intensity[i - 1]) / (w.intensity[i] - w.intensity[i - 1]);
    return w.times[i - 1] + f * (w.times[i] - w.times[i - 1]);
  };

  std::optional<double> t90;
  std::size_t i90 = 0;
  for (std::size_t i = ilo + 1; i <= im; ++i)
    if (w.intensity[i - 1] < v90 && w.intensity[i] >= v90) {
      t90 = cross_time(i, v90);
      i90 = i;
      break;
    }
  if (!t90) return std::nullopt;

  std::optional<double> t10;
  for (std::size_t i = i90; i > ilo; --i)
    if (w.intensity[i - 1] <= v10 && w.intensity[i] > v10) {
      t10 = cross_time(i, v10);
      break;
    }
  if (!t10) return std::nullopt;
  return RiseTime{*t10, *t90, *t90 - *t10};
}

// ---------------------------------------------------------------------------
// excitation bookkeeping

struct EmissionBudget {
  double cavity_emission = 0.0;  // integral kappa <n> dt
  double leak_emission = 0.0;    // integral gamma_qd rho_exciton dt
  double residual = 0.0;         // excitation still stored at the end of the span
  double delivered = 0.0;        // integral pump_amplitude * rho_ground dt over the window
  double cavity_fraction = 0.0;  // cavity / (cavity + leak)
};

inline EmissionBudget emission_budget(const Trajectory& traj, const SimParams& params) {
  if (traj.size() < 2) throw DomainError("trajectory too short for bookkeeping");
  EmissionBudget b;
  b.cavity_emission = trapezoid(traj.times, traj.emission_rate);
  std::vector<double> leak(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) leak[i] = params.gamma_qd * traj.pop_exciton[i];
  b.leak_emission = trapezoid(traj.times, leak);
  b.residual = traj.pop_exciton.back() + traj.pop_pump.back() + traj.photon_number.back();

  // clip the pump window against each sample interval; integrand is linear
  if (params.pump.amplitude > 0.0) {
    double w0 = params.pump.t0 - 0.5 * params.pump.width;
    double w1 = params.pump.t0 + 0.5 * params.pump.width;
    for (std::size_t i = 1; i < traj.size(); ++i) {
      double a = std::max(traj.times[i - 1], w0);
      double c = std::min(traj.times[i], w1);
      if (c <= a) continue;
      double dt = traj.times[i] - traj.times[i - 1];
      auto g_at = [&](double tt) {
        double f = (tt - traj.times[i - 1]) / dt;
        return traj.pop_ground[i - 1] + f * (traj.pop_ground[i] - traj.pop_ground[i - 1]);
      };
      b.delivered += params.pump.amplitude * 0.5 * (g_at(a) + g_at(c)) * (c - a);
    }
  }
  double total = b.cavity_emission + b.leak_emission;
  b.cavity_fraction = total > 0.0 ? b.cavity_emission / total : 0.0;
  return b;
}

// time from the pump center to the detuning trace first crossing the midpoint
// of its overall swing; empty when the window never crosses it
inline std::optional<double> effective_delay(const Trajectory& traj, double pump_t0) {
  if (traj.size() < 2) return std::nullopt;
  double dmin = *std::min_element(traj.detuning.begin(), traj.detuning.end());
  double dmax = *std::max_element(traj.detuning.begin(), traj.detuning.end());
  double swing = dmax - dmin;
  if (!(swing > 1e-9 * std::max(1.0, std::abs(dmax)))) return std::nullopt;
  double mid = 0.5 * (dmin + dmax);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (traj.times[i] <= pump_t0) continue;
    double f0 = traj.detuning[i - 1] - mid, f1 = traj.detuning[i] - mid;
    if (f0 == 0.0 && traj.times[i - 1] > pump_t0) return traj.times[i - 1] - pump_t0;
    if (f0 * f1 < 0.0) {
      double frac = f0 / (f0 - f1);
      double tc = traj.times[i - 1] + frac * (traj.times[i] - traj.times[i - 1]);
      if (tc > pump_t0) return tc - pump_t0;
    }
  }
  return std::nullopt;
}

}  // namespace qdcav
