#include "pdg/odeint.hpp"

#include "pdg/core.hpp"
#include "pdg/dynamics.hpp"
#include "pdg/steering.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

using namespace pdg;

namespace {

ProblemConfig config_with_delta(double delta) {
  RegularizationConfig reg;
  reg.delta = delta;
  return make_problem(PhysicalConstants{}, reg);
}

OdeVec vec1(double a) {
  OdeVec y(1);
  y[0] = a;
  return y;
}

// Initial condition and converged unknowns of the landing problem at weight
// 1e-5 (see tests/oracle/frozen_values.py and test_shooting.cpp); used here
// as a realistic stiff-ish system for the propagation wrappers.
const State kX0{1753.0e3 / 1.738e6, 1679.5 / 1679.5664956615076, 0.0, 1.0};
const Costate kP05{0.4899529879, 0.3298739806, -0.0242548285, 0.5592730183};

}  // namespace

TEST_CASE("settings validation") {
  IntegratorSettings s;
  CHECK_NOTHROW(s.validate());
  s.rel_tol = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.rel_tol = 1e-10;
  s.max_step = -1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("exponential decay hits the analytic endpoint") {
  IntegratorSettings settings;
  auto rhs = [](double, const OdeVec& y, OdeVec& dy) { dy = -y; };
  IntegrationResult res = integrate(rhs, 0.0, 1.0, vec1(1.0), settings);
  CHECK(res.status == TerminationStatus::ReachedEnd);
  CHECK(res.end_time == 1.0);
  CHECK(res.end_state[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-11));
  CHECK(res.accepted_steps > 0);
  CHECK(res.times.size() == res.states.size());
  CHECK(std::is_sorted(res.times.begin(), res.times.end()));
}

TEST_CASE("oscillator round trip conserves the invariant") {
  IntegratorSettings settings;
  auto rhs = [](double, const OdeVec& y, OdeVec& dy) {
    dy.resize(2);
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  OdeVec y0(2);
  y0 << 1.0, 0.0;
  const double two_pi = 2 * std::acos(-1.0);
  IntegrationResult res = integrate(rhs, 0.0, two_pi, y0, settings);
  CHECK(res.end_state[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(res.end_state[1]) < 1e-9);
  for (const OdeVec& y : res.states) {
    CHECK(y[0] * y[0] + y[1] * y[1] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("dense output lands on the requested grid") {
  IntegratorSettings settings;
  settings.dense_output_dt = 0.125;
  auto rhs = [](double, const OdeVec& y, OdeVec& dy) { dy = -y; };
  IntegrationResult res = integrate(rhs, 0.0, 1.0, vec1(1.0), settings);
  // Every grid point must appear among the emitted samples, with the dense
  // interpolant accurate to the step tolerance.
  for (int k = 0; k <= 8; ++k) {
    double tg = 0.125 * k;
    auto it = std::min_element(res.times.begin(), res.times.end(), [&](double a, double b) {
      return std::abs(a - tg) < std::abs(b - tg);
    });
    CHECK(std::abs(*it - tg) < 1e-12);
    const OdeVec& y = res.states[static_cast<size_t>(it - res.times.begin())];
    CHECK(y[0] == doctest::Approx(std::exp(-tg)).epsilon(1e-9));
  }
}

TEST_CASE("directional event crossing") {
  IntegratorSettings settings;
  auto rhs = [](double t, const OdeVec&, OdeVec& dy) {
    dy.resize(1);
    dy[0] = std::cos(t);
  };
  const double pi = std::acos(-1.0);
  // y = sin(t): descending zero at pi, ascending zero at 2*pi.
  OdeEvent ev;
  ev.value = [](double, const OdeVec& y) { return y[0]; };
  ev.direction = -1;
  IntegrationResult res =
      integrate(rhs, 0.1, 7.0, vec1(std::sin(0.1)), settings, {ev});
  CHECK(res.status == TerminationStatus::EventTriggered);
  CHECK(res.triggered_event == 0);
  CHECK(res.end_time == doctest::Approx(pi).epsilon(1e-10));

  // Ascending watch must start on the unsatisfied side of the threshold.
  ev.direction = +1;
  res = integrate(rhs, 3.5, 9.0, vec1(std::sin(3.5)), settings, {ev});
  CHECK(res.status == TerminationStatus::EventTriggered);
  CHECK(res.end_time == doctest::Approx(2 * pi).epsilon(1e-10));
  CHECK(std::abs(res.end_state[0]) < 1e-9);
}

TEST_CASE("an event satisfied at the start returns a zero-length result") {
  IntegratorSettings settings;
  auto rhs = [](double, const OdeVec& y, OdeVec& dy) { dy = -y; };
  OdeEvent ev;
  ev.value = [](double, const OdeVec& y) { return y[0] - 2.0; };
  ev.direction = -1;  // already below the threshold
  IntegrationResult res = integrate(rhs, 0.0, 1.0, vec1(1.0), settings, {ev});
  CHECK(res.status == TerminationStatus::EventTriggered);
  CHECK(res.times.size() == 1);
  CHECK(res.end_time == 0.0);
  CHECK(res.end_state[0] == 1.0);
}

TEST_CASE("pending event at the end of the span is a timeout") {
  IntegratorSettings settings;
  auto rhs = [](double, const OdeVec& y, OdeVec& dy) { dy = -y; };
  OdeEvent ev;
  ev.value = [](double, const OdeVec& y) { return y[0] - 5.0; };
  IntegrationResult res = integrate(rhs, 0.0, 1.0, vec1(1.0), settings, {ev});
  CHECK(res.status == TerminationStatus::Timeout);
  CHECK(res.end_time == 1.0);
}

TEST_CASE("grazing contact is located through the slope") {
  IntegratorSettings settings;
  // y = (t-1)^2 + c: touches c at t = 1 with no sign change for c = 0.
  auto rhs = [](double t, const OdeVec&, OdeVec& dy) {
    dy.resize(1);
    dy[0] = 2 * (t - 1.0);
  };
  OdeEvent ev;
  ev.value = [](double, const OdeVec& y) { return y[0]; };
  ev.direction = -1;
  ev.slope = [](double t, const OdeVec&) { return 2 * (t - 1.0); };
  ev.grazing_tol = 1e-9;
  IntegrationResult res = integrate(rhs, 0.0, 2.0, vec1(1.0), settings, {ev});
  CHECK(res.status == TerminationStatus::EventTriggered);
  CHECK(res.end_time == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(res.end_state[0]) <= 1e-9);

  // Same pass with grazing detection off: the touch is missed.
  ev.grazing_tol = 0;
  res = integrate(rhs, 0.0, 2.0, vec1(1.0), settings, {ev});
  CHECK(res.status == TerminationStatus::Timeout);
}

TEST_CASE("non-finite derivatives stop the integration") {
  IntegratorSettings settings;
  auto rhs = [](double t, const OdeVec& y, OdeVec& dy) {
    dy.resize(1);
    dy[0] = t < 0.5 ? -y[0] : std::numeric_limits<double>::quiet_NaN();
  };
  IntegrationResult res = integrate(rhs, 0.0, 1.0, vec1(1.0), settings);
  CHECK(res.status == TerminationStatus::StepFailure);
  CHECK(!res.message.empty());
}

TEST_CASE("finite-time blowup stops with a step failure") {
  IntegratorSettings settings;
  auto rhs = [](double, const OdeVec& y, OdeVec& dy) { dy = y.cwiseProduct(y); };
  IntegrationResult res = integrate(rhs, 0.0, 2.0, vec1(1.0), settings);
  CHECK(res.status == TerminationStatus::StepFailure);
}

TEST_CASE("extended vector pack round trip") {
  ExtendedState s{{1.01, 0.2, -0.1, 0.7}, {3.0, -0.4, 0.5, 0.2}, 0.37};
  OdeVec y = pack_extended(s);
  REQUIRE(y.size() == 9);
  ExtendedState b = unpack_extended(y);
  CHECK(b.x.vec() == s.x.vec());
  CHECK(b.p.vec() == s.p.vec());
  CHECK(b.accumulated_cost == s.accumulated_cost);
}

TEST_CASE("reverse-time extremal rates negate the forward ones") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  OdeRhs fwd = extremal_rhs(cfg, 1.0);
  OdeRhs rev = extremal_rhs(cfg, -1.0);
  OdeVec y = pack_extended({{1.004, 0.1, -0.05, 0.6}, {50.0, 0.3, -0.5, 0.1}, 0.2});
  OdeVec a(9), b(9);
  fwd(0.0, y, a);
  rev(0.0, y, b);
  CHECK((a + b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("propagated extremal keeps its invariants") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  IntegratorSettings settings;
  ExtendedState start{kX0, kP05, 0.0};
  Trajectory traj = propagate(start, 0.0, 0.05, settings, cfg);
  REQUIRE(traj.nodes.size() > 10);
  CHECK(traj.meta.status == TerminationStatus::ReachedEnd);
  const double h0 = traj.nodes.front().hamiltonian;
  for (const TrajectoryNode& n : traj.nodes) {
    // Free-time extremal: H stays put; mass runs on the constant-flow line.
    CHECK(std::abs(n.hamiltonian - h0) < 1e-8);
    CHECK(n.x.m == doctest::Approx(kX0.m - cfg.mdot * n.t).epsilon(1e-12));
    CHECK(std::abs(stationarity_residual(n.x, n.p, n.beta, cfg)) < 5e-10);
    CHECK(n.delta_term == doctest::Approx(regularization_term(n.x.r, n.beta, cfg.reg))
                              .epsilon(1e-12));
  }
}

TEST_CASE("altitude event stops the descent at the requested shell") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  IntegratorSettings settings;
  ExtendedState start{kX0, kP05, 0.0};
  const double shell = 0.004;  // about half the initial altitude
  Trajectory traj = propagate_to_event(start, 0.0, 0.6, altitude_event(shell, -1),
                                       settings, cfg);
  REQUIRE(!traj.nodes.empty());
  CHECK(traj.meta.status == TerminationStatus::EventTriggered);
  CHECK(traj.nodes.back().x.r - 1.0 == doctest::Approx(shell).epsilon(1e-9));
  // Strictly above the shell before the hit.
  for (size_t i = 0; i + 1 < traj.nodes.size(); ++i) {
    CHECK(traj.nodes[i].x.r - 1.0 >= shell - 1e-12);
  }
}

TEST_CASE("unreached event reports a timeout with the partial path") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  IntegratorSettings settings;
  ExtendedState start{kX0, kP05, 0.0};
  Trajectory traj = propagate_to_event(start, 0.0, 0.01, altitude_event(0.004, -1),
                                       settings, cfg);
  CHECK(traj.meta.status == TerminationStatus::Timeout);
  CHECK(!traj.nodes.empty());
  CHECK(traj.nodes.back().t == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("trajectory CSV round trip is bit exact") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  IntegratorSettings settings;
  Trajectory traj = propagate({kX0, kP05, 0.0}, 0.0, 0.03, settings, cfg);
  traj.meta.p_r0 = kP05.p_r;
  traj.meta.final_time = 0.03;
  traj.meta.config_hash = "deadbeef";
  std::string path = "roundtrip_traj.csv";
  write_trajectory_csv(traj, path);
  Trajectory back = read_trajectory_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.nodes.size() == traj.nodes.size());
  for (size_t i = 0; i < traj.nodes.size(); ++i) {
    CHECK(back.nodes[i].t == traj.nodes[i].t);
    CHECK(back.nodes[i].x.vec() == traj.nodes[i].x.vec());
    CHECK(back.nodes[i].p.vec() == traj.nodes[i].p.vec());
    CHECK(back.nodes[i].beta == traj.nodes[i].beta);
    CHECK(back.nodes[i].hamiltonian == traj.nodes[i].hamiltonian);
    CHECK(back.nodes[i].delta_term == traj.nodes[i].delta_term);
  }
}
