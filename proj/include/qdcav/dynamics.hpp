#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "qdcav/constants.hpp"
#include "qdcav/errors.hpp"
#include "qdcav/qops.hpp"
#include "qdcav/schedule.hpp"

// Lindblad master equation for the driven emitter-cavity system, integrated
// with an adaptive Dormand-Prince 5(4) scheme. The frame rotates at the
// cavity frequency, so the only coherent time dependence is the emitter
// detuning supplied by the schedule:
//
//   H(t) = delta(t) |2><2| + i g (a sigma(2,1) - a^+ sigma(1,2))
//   drho/dt = -i[H, rho] + kappa D[a] + gamma_qd D[sigma(1,2)]
//             + gamma_relax D[sigma(2,3)] + phi(t) D[sigma(3,1)]
//
// phi(t) is a rectangular incoherent pump window feeding the exciton through
// the fast-relaxing third level.

namespace qdcav {

struct PumpProfile {
  double t0 = 0.0;         // ns, center of the rectangular window
  double width = 0.07;     // ns
  double amplitude = 0.0;  // 1/ns transfer rate while the window is open

  bool active(double t) const { return std::abs(t - t0) <= 0.5 * width; }

  // choose the amplitude so the window transfers the ground population with
  // probability p: p = 1 - exp(-amplitude * width)
  static PumpProfile from_probability(double t0, double width, double p) {
    if (!(width > 0.0)) throw DomainError("pump width must be positive");
    if (p < 0.0 || p >= 1.0)
      throw DomainError("excitation probability must lie in [0, 1), got " + std::to_string(p));
    PumpProfile out;
    out.t0 = t0;
    out.width = width;
    out.amplitude = p == 0.0 ? 0.0 : -std::log1p(-p) / width;
    return out;
  }
};

inline double excitation_probability(const PumpProfile& pump) {
  if (!(pump.width > 0.0)) throw DomainError("pump width must be positive");
  return -std::expm1(-pump.amplitude * pump.width);
}

struct SimParams {
  double g = ghz_to_rad_per_ns(1.72);        // emitter-cavity coupling, rad/ns
  double coupling_phase = 0.0;               // gauge phase on g; observables must not depend on it
  double kappa_cav = ghz_to_rad_per_ns(22.0);  // cavity energy decay rate
  double gamma_qd = ghz_to_rad_per_ns(0.036);  // residual emitter decay into non-cavity modes
  double gamma_relax = 100.0;                // pump-level -> exciton relaxation, 1/ns
  PumpProfile pump{};
  double omega_cav = mev_to_rad_per_ns(978.02);  // absolute cavity frequency (frame)
  int n_fock = 2;
};

inline void validate(const SimParams& p) {
  if (p.n_fock < 1) throw DomainError("n_fock must be >= 1");
  if (!(p.g >= 0.0) || !std::isfinite(p.g)) throw DomainError("coupling g must be finite and >= 0");
  if (!std::isfinite(p.coupling_phase)) throw DomainError("coupling phase must be finite");
  if (!(p.kappa_cav >= 0.0) || !std::isfinite(p.kappa_cav))
    throw DomainError("kappa_cav must be finite and >= 0");
  if (!(p.gamma_qd >= 0.0) || !std::isfinite(p.gamma_qd))
    throw DomainError("gamma_qd must be finite and >= 0");
  if (!(p.gamma_relax >= 0.0) || !std::isfinite(p.gamma_relax))
    throw DomainError("gamma_relax must be finite and >= 0");
  if (!(p.pump.width > 0.0)) throw DomainError("pump width must be positive");
  if (!(p.pump.amplitude >= 0.0) || !std::isfinite(p.pump.amplitude))
    throw DomainError("pump amplitude must be finite and >= 0");
  if (!std::isfinite(p.omega_cav)) throw DomainError("cavity frequency must be finite");
}

inline Matrix hamiltonian(const SimParams& params, double delta_qd, const HilbertSpace& space) {
  Matrix h = delta_qd * level_projector(space, level_exciton);
  if (params.g != 0.0) {
    Complex gc = params.g * std::exp(Complex(0.0, params.coupling_phase));
    Matrix raise = annihilation(space) * sigma(space, level_exciton, level_ground);
    h += Complex(0.0, 1.0) * (gc * raise - std::conj(gc) * Matrix(raise.adjoint()));
  }
  return h;
}

namespace detail {

// operators assembled once per evolve() call; rhs() is the hot path
struct LindbladWorkspace {
  HilbertSpace space;
  double kappa, gamma_qd, gamma_relax;
  Matrix h_coupling;
  Matrix exciton_proj;
  Matrix a, a_dag, n_op;
  Matrix j_qd, j_relax, j_pump;
  Matrix j_relax_sq, j_pump_sq;  // J^+ J for the emitter channels

  explicit LindbladWorkspace(const SimParams& p)
      : space(p.n_fock),
        kappa(p.kappa_cav),
        gamma_qd(p.gamma_qd),
        gamma_relax(p.gamma_relax),
        exciton_proj(level_projector(space, level_exciton)),
        a(annihilation(space)),
        a_dag(creation(space)),
        n_op(number_operator(space)),
        j_qd(sigma(space, level_ground, level_exciton)),
        j_relax(sigma(space, level_exciton, level_pump)),
        j_pump(sigma(space, level_pump, level_ground)) {
    SimParams zero_detuned = p;
    h_coupling = hamiltonian(zero_detuned, 0.0, space);
    j_relax_sq = j_relax.adjoint() * j_relax;
    j_pump_sq = j_pump.adjoint() * j_pump;
  }

  Matrix rhs(const Matrix& rho, double delta, double pump_amp) const {
    Matrix h = h_coupling + delta * exciton_proj;
    Matrix out = Complex(0.0, -1.0) * (h * rho - rho * h);
    if (kappa > 0.0)
      out += kappa * (a * rho * a_dag) - (0.5 * kappa) * (n_op * rho + rho * n_op);
    if (gamma_qd > 0.0)
      // sigma(2,1)sigma(1,2) is the exciton projector
      out += gamma_qd * (j_qd * rho * j_qd.adjoint()) -
             (0.5 * gamma_qd) * (exciton_proj * rho + rho * exciton_proj);
    if (gamma_relax > 0.0)
      out += gamma_relax * (j_relax * rho * j_relax.adjoint()) -
             (0.5 * gamma_relax) * (j_relax_sq * rho + rho * j_relax_sq);
    if (pump_amp > 0.0)
      out += pump_amp * (j_pump * rho * j_pump.adjoint()) -
             (0.5 * pump_amp) * (j_pump_sq * rho + rho * j_pump_sq);
    return out;
  }
};

}  // namespace detail

// pointwise right-hand side; the pump window is treated as closed, the term
// is active whenever |t - t0| <= width/2
inline Matrix liouvillian_rhs(const Matrix& rho, double t, const SimParams& params,
                              const DetuningSchedule& schedule) {
  validate(params);
  detail::LindbladWorkspace ws(params);
  if (rho.rows() != ws.space.dim() || rho.cols() != ws.space.dim())
    throw DimensionError("state dimension does not match n_fock");
  double amp = params.pump.amplitude > 0.0 && params.pump.active(t) ? params.pump.amplitude : 0.0;
  return ws.rhs(rho, schedule.detuning(t), amp);
}

struct EvolveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  int diagnostics_stride = 10;      // positivity check every N-th sample
  std::size_t max_steps = 20000000;  // hard stop for runaway integrations
};

struct Trajectory {
  std::vector<double> times;          // ns, uniform grid
  std::vector<double> pop_ground;
  std::vector<double> pop_exciton;
  std::vector<double> pop_pump;
  std::vector<double> photon_number;  // <a^+ a>
  std::vector<double> emission_rate;  // kappa_cav * photon_number, photons/ns
  std::vector<double> detuning;       // rad/ns, schedule sampled on the grid
  std::vector<double> trace_error;    // |Tr rho - 1|

  std::vector<double> diag_times;     // subset of times where positivity was checked
  std::vector<double> min_eigenvalue;

  Matrix final_state;  // density matrix at the end of the span

  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  std::size_t rhs_evaluations = 0;
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue_overall = std::numeric_limits<double>::infinity();
  double max_top_fock_population = 0.0;
  bool truncation_warning = false;

  std::size_t size() const { return times.size(); }
};

namespace detail {

inline double weighted_error_norm(const Matrix& err, const Matrix& y0, const Matrix& y1,
                                  double atol, double rtol) {
  double sum = 0.0;
  const Complex* e = err.data();
  const Complex* a = y0.data();
  const Complex* b = y1.data();
  const std::ptrdiff_t n = err.size();
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double scale = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    double q = std::abs(e[i]) / scale;
    sum += q * q;
  }
  return std::sqrt(sum / double(n));
}

}  // namespace detail

// Integrate the master equation over t_span and sample observables on the
// uniform grid t0 + k*sample_dt. The stepper restarts exactly at pump window
// edges and schedule switching times, so the right-hand side is smooth inside
// every internal segment. Fully deterministic: identical inputs give
// bitwise-identical trajectories.
inline Trajectory evolve(const Matrix& rho0, const SimParams& params,
                         const DetuningSchedule& schedule, std::pair<double, double> t_span,
                         double sample_dt, const EvolveOptions& options = {}) {
  validate(params);
  HilbertSpace space(params.n_fock);
  if (rho0.rows() != space.dim() || rho0.cols() != space.dim())
    throw DimensionError("initial state dimension does not match n_fock");
  validate_density_matrix(rho0);
  const double t0 = t_span.first, t1 = t_span.second;
  if (!(t1 > t0)) throw DomainError("time span must be increasing");
  if (!(sample_dt > 0.0) || sample_dt > (t1 - t0) * (1.0 + 1e-12))
    throw DomainError("sample_dt must be positive and no larger than the span");
  if (options.diagnostics_stride < 1) throw DomainError("diagnostics stride must be >= 1");
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0))
    throw DomainError("tolerances must be positive");

  const double span = t1 - t0;
  detail::LindbladWorkspace ws(params);

  // Dormand-Prince 5(4) tableau
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  // dense-output weights (quartic interpolant)
  static constexpr double d1 = -12715105075.0 / 11282082432.0;
  static constexpr double d3 = 87487479700.0 / 32700410799.0;
  static constexpr double d4 = -10690763975.0 / 1880347072.0;
  static constexpr double d5 = 701980252875.0 / 199316789632.0;
  static constexpr double d6 = -1453857185.0 / 822651844.0;
  static constexpr double d7 = 69997945.0 / 29380423.0;

  // uniform sample grid
  const std::size_t n_samples = std::size_t(std::floor(span / sample_dt * (1.0 + 1e-12))) + 1;
  auto sample_time = [&](std::size_t k) { return t0 + double(k) * sample_dt; };

  Trajectory traj;
  traj.times.reserve(n_samples);
  traj.pop_ground.reserve(n_samples);
  traj.pop_exciton.reserve(n_samples);
  traj.pop_pump.reserve(n_samples);
  traj.photon_number.reserve(n_samples);
  traj.emission_rate.reserve(n_samples);
  traj.detuning.reserve(n_samples);
  traj.trace_error.reserve(n_samples);

  auto record = [&](std::size_t k, double ts, const Matrix& state) {
    double tr_err = trace_error(state);
    double herm = hermiticity_error(state);
    if (tr_err >= 1e-8) throw HealthError("trace drifted by " + std::to_string(tr_err), ts);
    if (herm >= 1e-9) throw HealthError("state lost hermiticity by " + std::to_string(herm), ts);
    traj.max_trace_error = std::max(traj.max_trace_error, tr_err);
    traj.max_hermiticity_error = std::max(traj.max_hermiticity_error, herm);

    double nph = 0.0;
    for (int level = 1; level <= HilbertSpace::emitter_dim; ++level)
      for (int n = 1; n <= space.n_fock(); ++n)
        nph += double(n) * state(space.index(level, n), space.index(level, n)).real();

    traj.times.push_back(ts);
    traj.pop_ground.push_back(level_population(state, space, level_ground));
    traj.pop_exciton.push_back(level_population(state, space, level_exciton));
    traj.pop_pump.push_back(level_population(state, space, level_pump));
    traj.photon_number.push_back(nph);
    traj.emission_rate.push_back(params.kappa_cav * nph);
    traj.detuning.push_back(schedule.detuning(ts));
    traj.trace_error.push_back(tr_err);

    double topf = top_fock_population(state, space);
    traj.max_top_fock_population = std::max(traj.max_top_fock_population, topf);
    if (topf >= 1e-6) traj.truncation_warning = true;

    bool want_diag = (k % std::size_t(options.diagnostics_stride) == 0) || (k + 1 == n_samples);
    if (want_diag) {
      double lam = min_eigenvalue(state);
      if (lam <= -1e-9)
        throw HealthError("state developed negative eigenvalue " + std::to_string(lam), ts);
      traj.diag_times.push_back(ts);
      traj.min_eigenvalue.push_back(lam);
      traj.min_eigenvalue_overall = std::min(traj.min_eigenvalue_overall, lam);
    }
  };

  // split the span at pump edges and schedule switching times
  std::vector<double> cuts{t0, t1};
  if (params.pump.amplitude > 0.0) {
    for (double e : {params.pump.t0 - 0.5 * params.pump.width, params.pump.t0 + 0.5 * params.pump.width})
      if (e > t0 && e < t1) cuts.push_back(e);
  }
  for (double b : schedule.breakpoints(t0, t1)) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  const double merge_tol = 1e-12 * std::max(1.0, span);
  std::vector<double> edges;
  for (double c : cuts)
    if (edges.empty() || c - edges.back() > merge_tol) edges.push_back(c);
  if (edges.back() != t1) edges.back() = t1;

  Matrix y = rho0;
  record(0, t0, y);
  std::size_t next_sample = 1;
  const double emit_tol = 1e-9 * sample_dt;
  const double h_floor = 1e-13 * std::max(1.0, span);

  double h_carry = -1.0;
  Matrix k1, k2, k3, k4, k5, k6, k7, y_new, err_m;

  for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
    const double a = edges[seg], b = edges[seg + 1];
    // the pump is either on or off throughout a segment; decide at the midpoint
    const double mid = 0.5 * (a + b);
    const double pump_amp =
        params.pump.amplitude > 0.0 && params.pump.active(mid) ? params.pump.amplitude : 0.0;
    auto f = [&](const Matrix& state, double t) {
      ++traj.rhs_evaluations;
      return ws.rhs(state, schedule.detuning(t), pump_amp);
    };

    double t = a;
    double h = h_carry > 0.0 ? std::min(h_carry, b - a) : std::min(b - a, 1e-3);
    k1 = f(y, t);
    bool just_rejected = false;
    const double seg_tiny = 1e-14 * std::max(1.0, std::abs(b));

    while (b - t > seg_tiny) {
      if (traj.steps_accepted + traj.steps_rejected > options.max_steps)
        throw IntegrationError("step budget exhausted", t);
      h = std::min(h, b - t);

      k2 = f(y + (h * a21) * k1, t + c2 * h);
      k3 = f(y + h * (a31 * k1 + a32 * k2), t + c3 * h);
      k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3), t + c4 * h);
      k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), t + c5 * h);
      k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), t + h);
      y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = f(y_new, t + h);

      err_m = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double err = detail::weighted_error_norm(err_m, y, y_new, options.abs_tol, options.rel_tol);

      if (err <= 1.0) {
        // emit samples covered by this step through the dense interpolant
        if (next_sample < n_samples && sample_time(next_sample) <= t + h + emit_tol) {
          Matrix ydiff = y_new - y;
          Matrix rc3 = h * k1 - ydiff;
          Matrix rc4 = ydiff - h * k7 - rc3;
          Matrix rc5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
          while (next_sample < n_samples) {
            double ts = sample_time(next_sample);
            if (ts > t + h + emit_tol) break;
            double theta = std::clamp((ts - t) / h, 0.0, 1.0);
            Matrix ys = y + theta * (ydiff + (1.0 - theta) * (rc3 + theta * (rc4 + (1.0 - theta) * rc5)));
            record(next_sample, ts, ys);
            ++next_sample;
          }
        }
        ++traj.steps_accepted;
        y.swap(y_new);
        k1.swap(k7);  // first-same-as-last
        t += h;
        double factor = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (just_rejected) factor = std::min(factor, 1.0);
        h *= factor;
        just_rejected = false;
      } else {
        ++traj.steps_rejected;
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        just_rejected = true;
        if (h < h_floor) throw IntegrationError("step size collapsed below the resolvable scale", t);
      }
    }
    // catch samples that round onto the segment end
    while (next_sample < n_samples && sample_time(next_sample) <= b + emit_tol) {
      record(next_sample, sample_time(next_sample), y);
      ++next_sample;
    }
    h_carry = h;
  }

  while (next_sample < n_samples && sample_time(next_sample) <= t1 + emit_tol) {
    record(next_sample, sample_time(next_sample), y);
    ++next_sample;
  }

  traj.final_state = y;
  return traj;
}

}  // namespace qdcav
