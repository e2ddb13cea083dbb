#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qdcav/constants.hpp"
#include "qdcav/schedule.hpp"

using namespace qdcav;

namespace {

RcSquareWave example_wave() {
  RcSquareWave w;
  w.omega_a = mev_to_rad_per_ns(978.02);
  w.omega_b = mev_to_rad_per_ns(977.89);
  w.delay = 7.47;
  w.period = 16.67;
  w.tau_rc = 0.14;
  return w;
}

}  // namespace

TEST_CASE("rc square wave is periodic") {
  RcSquareWave w = example_wave();
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> pick(-50.0, 50.0);
  double scale = std::abs(w.omega_b - w.omega_a);
  for (int i = 0; i < 100; ++i) {
    double t = pick(rng);
    CHECK(std::abs(eval(w, t + w.period) - eval(w, t)) < 1e-10 * scale);
    CHECK(std::abs(eval(w, t - 3.0 * w.period) - eval(w, t)) < 1e-10 * scale);
  }
}

TEST_CASE("rc square wave is continuous at the switch instants") {
  RcSquareWave w = example_wave();
  // approach each junction from both sides; mismatch must shrink linearly in eps
  for (double t_switch : {w.delay, w.delay + 0.5 * w.period}) {
    double gap6 = std::abs(eval(w, t_switch + 1e-6) - eval(w, t_switch - 1e-6));
    double gap7 = std::abs(eval(w, t_switch + 1e-7) - eval(w, t_switch - 1e-7));
    double scale = std::abs(w.omega_b - w.omega_a);
    CHECK(gap6 < 1e-4 * scale);
    CHECK(gap7 < 0.2 * gap6 + 1e-14 * scale);
  }
}

TEST_CASE("normalized response stays inside its analytic range") {
  RcSquareWave w = example_wave();
  w.tau_rc = 2.0;  // slow filter so the plateaus are visibly clipped
  double c = 1.0 / (1.0 + std::exp(-0.5 * w.period / w.tau_rc));
  for (int i = 0; i <= 20000; ++i) {
    double t = -w.period + 3.0 * w.period * double(i) / 20000.0;
    double f = normalized_response(w, t);
    CHECK(f >= (1.0 - c) - 1e-12);
    CHECK(f <= c + 1e-12);
  }
}

TEST_CASE("plateau matching identity holds to machine precision") {
  for (double ratio : {0.1, 1.0, 10.0, 59.5}) {
    double half = 1.0, tau = half / ratio;
    double c = 1.0 / (1.0 + std::exp(-half / tau));
    CHECK(std::abs((1.0 - c) - c * std::exp(-half / tau)) < 1e-15);
  }
}

TEST_CASE("10-90 rise of the filtered edge is ln(9) tau_rc") {
  RcSquareWave w = example_wave();
  // invert f(u) = 1 - C exp(-u/tau) on the rising branch for the 10% and 90%
  // levels of the realized span [1-C, C]
  double half = 0.5 * w.period;
  double c = 1.0 / (1.0 + std::exp(-half / w.tau_rc));
  double lo = (1.0 - c) + 0.1 * (2.0 * c - 1.0);
  double hi = (1.0 - c) + 0.9 * (2.0 * c - 1.0);
  double u_lo = -w.tau_rc * std::log((1.0 - lo) / c);
  double u_hi = -w.tau_rc * std::log((1.0 - hi) / c);
  double rise = u_hi - u_lo;
  CHECK(rise == Catch::Approx(std::log(9.0) * w.tau_rc).epsilon(0.01));
  CHECK(rise == Catch::Approx(0.3076).margin(0.0031));
  // the crossings really sit on the curve
  CHECK(normalized_response(w, w.delay + u_lo) == Catch::Approx(lo).margin(1e-12));
  CHECK(normalized_response(w, w.delay + u_hi) == Catch::Approx(hi).margin(1e-12));
}

TEST_CASE("switching times enumerate half-period junctions strictly inside") {
  RcSquareWave w;
  w.period = 2.0;
  w.tau_rc = 0.1;
  auto ts = switching_times(w, 0.0, 5.0);
  REQUIRE(ts.size() == 4);
  CHECK(ts[0] == Catch::Approx(1.0));
  CHECK(ts[1] == Catch::Approx(2.0));
  CHECK(ts[2] == Catch::Approx(3.0));
  CHECK(ts[3] == Catch::Approx(4.0));

  w.delay = 0.25;
  ts = switching_times(w, 0.0, 2.0);
  REQUIRE(ts.size() == 2);
  CHECK(ts[0] == Catch::Approx(0.25));
  CHECK(ts[1] == Catch::Approx(1.25));

  CHECK(switching_times(w, 1.0, 1.0).empty());
}

TEST_CASE("rc wave parameter validation") {
  RcSquareWave w = example_wave();
  w.period = 0.0;
  CHECK_THROWS_AS(validate(w), DomainError);
  w = example_wave();
  w.tau_rc = -1.0;
  CHECK_THROWS_AS(validate(w), DomainError);
  w = example_wave();
  w.omega_b = std::nan("");
  CHECK_THROWS_AS(validate(w), DomainError);
}

TEST_CASE("stark field and energy map") {
  StarkModel m;
  m.e0_mev = 981.25;
  m.p_e_nm = -0.04;
  m.beta_pol = -3.1e3;

  // reverse bias of -1200 mV across the 240 nm intrinsic region
  CHECK(stark_field_kv_per_cm(m, -1.2) == Catch::Approx(95.8333333333).epsilon(1e-9));
  // flat band: no field, bare line position
  CHECK(stark_field_kv_per_cm(m, m.v_bi) == 0.0);
  CHECK(stark_energy_mev(m, m.v_bi) == m.e0_mev);
  // reverse bias red-shifts for this dipole orientation
  CHECK(stark_energy_mev(m, -1.2) < m.e0_mev);

  StarkModel rigid = m;
  rigid.p_e_nm = 0.0;
  rigid.beta_pol = 0.0;
  for (double v : {-2.0, -0.5, 0.0, 1.0})
    CHECK(stark_energy_mev(rigid, v) == rigid.e0_mev);

  StarkModel bad = m;
  bad.d_intrinsic_nm = 0.0;
  CHECK_THROWS_AS(validate(bad), DomainError);
}

TEST_CASE("stark slope matches a central difference") {
  StarkModel m;
  m.e0_mev = 981.25;
  m.p_e_nm = -0.04;
  m.beta_pol = -3.1e3;
  double dv = 1e-5;
  for (double v : {-1.5, -0.3, 0.8}) {
    double fd = (stark_energy_mev(m, v + dv) - stark_energy_mev(m, v - dv)) / (2.0 * dv);
    CHECK(stark_energy_slope_mev_per_v(m, v) == Catch::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("constant detuning schedule") {
  auto s = DetuningSchedule::constant(0.0);
  CHECK(s.is_constant());
  CHECK(s.detuning(0.0) == 0.0);
  CHECK(s.detuning(123.4) == 0.0);
  CHECK(s.breakpoints(0.0, 100.0).empty());

  auto shifted = DetuningSchedule::constant(-5.5);
  CHECK(shifted.detuning(2.0) == -5.5);
  auto span = shifted.presentation_span();
  CHECK(span.second > span.first);
}

TEST_CASE("rc detuning schedule relative to the cavity frame") {
  RcSquareWave w = example_wave();
  double frame = w.omega_a;  // plateau A parked on the cavity
  auto s = DetuningSchedule::rc_square_wave(w, frame);
  CHECK(s.is_rc_square_wave());
  REQUIRE(s.rc_wave() != nullptr);
  CHECK(s.omega_frame() == frame);

  // deep in the B plateau the detuning is the full plateau separation
  double t_plateau = w.delay + 0.25 * w.period;
  double expect = (w.omega_b - w.omega_a);
  CHECK(s.detuning(t_plateau) == Catch::Approx(expect).epsilon(1e-9));
  CHECK(expect == Catch::Approx(mev_to_rad_per_ns(-0.13)).epsilon(1e-9));
  // and -0.13 meV is about -197.5 rad/ns
  CHECK(expect == Catch::Approx(-197.5).epsilon(0.001));

  // absolute frequency view is frame + detuning
  CHECK(s.omega(t_plateau) == Catch::Approx(frame + s.detuning(t_plateau)));

  // factory wraps the delay into one period
  RcSquareWave late = w;
  late.delay = w.delay - 5.0 * w.period;
  auto s2 = DetuningSchedule::rc_square_wave(late, frame);
  CHECK(s2.rc_wave()->delay == Catch::Approx(w.delay).margin(1e-9));
  CHECK(s2.detuning(1.23) == Catch::Approx(s.detuning(1.23)).margin(1e-12));

  auto bp = s.breakpoints(0.0, 2.0 * w.period);
  CHECK(bp.size() == 4);
}

TEST_CASE("sampled detuning schedule interpolates and clamps") {
  SampledSchedule trace;
  trace.times = {0.0, 1.0, 3.0};
  trace.omegas = {5.0, 7.0, 7.0};
  auto s = DetuningSchedule::sampled(trace, 0.0);
  CHECK(s.detuning(-1.0) == 5.0);
  CHECK(s.detuning(0.0) == 5.0);
  CHECK(s.detuning(0.5) == Catch::Approx(6.0));
  CHECK(s.detuning(2.0) == 7.0);
  CHECK(s.detuning(10.0) == 7.0);

  // node times become integrator restart points
  auto bp = s.breakpoints(0.0, 3.0);
  REQUIRE(bp.size() == 1);
  CHECK(bp[0] == 1.0);

  auto span = s.presentation_span();
  CHECK(span.first == 0.0);
  CHECK(span.second == 3.0);

  // a flat two-point trace in a zero frame reproduces its value everywhere
  SampledSchedule flat;
  flat.times = {0.0, 1.0};
  flat.omegas = {5.0, 5.0};
  auto sf = DetuningSchedule::sampled(flat, 0.0);
  for (double t : {-0.5, 0.0, 0.3, 1.0, 2.0}) CHECK(sf.detuning(t) == 5.0);
}

TEST_CASE("sampled schedule validation") {
  SampledSchedule one;
  one.times = {0.0};
  one.omegas = {1.0};
  CHECK_THROWS_AS(DetuningSchedule::sampled(one, 0.0), DomainError);

  SampledSchedule mismatch;
  mismatch.times = {0.0, 1.0};
  mismatch.omegas = {1.0};
  CHECK_THROWS_AS(DetuningSchedule::sampled(mismatch, 0.0), DomainError);

  SampledSchedule unsorted;
  unsorted.times = {0.0, 0.0};
  unsorted.omegas = {1.0, 2.0};
  CHECK_THROWS_AS(DetuningSchedule::sampled(unsorted, 0.0), DomainError);
}
