#include "pdg/steering.hpp"

#include "pdg/core.hpp"
#include "pdg/dynamics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace pdg;

namespace {

const double kPi = std::acos(-1.0);

ProblemConfig config_with_delta(double delta) {
  RegularizationConfig reg;
  reg.delta = delta;
  return make_problem(PhysicalConstants{}, reg);
}

// Brute-force floor of H over the angle for cross-checking the minimizer.
struct GridMin {
  double h;
  double beta;
};

GridMin grid_min_h(const State& x, const Costate& p, const ProblemConfig& cfg) {
  GridMin best{std::numeric_limits<double>::infinity(), 0};
  for (int i = 0; i < 14400; ++i) {
    double b = 2 * kPi * i / 14400.0;
    double h = hamiltonian(x, p, b, cfg);
    if (h < best.h) best = {h, b};
  }
  return best;
}

}  // namespace

TEST_CASE("zero weight reduces to the primer direction") {
  ProblemConfig cfg = config_with_delta(0.0);
  const State x{1.05, 0.4, -0.3, 0.8};
  const Costate p{0.7, -0.2, 0.5, 0.1};
  SteeringSolution s = optimal_steering(x, p, cfg);
  // Expected angle from tests/oracle/frozen_values.py (point A).
  CHECK(s.beta == doctest::Approx(5.0928953574970546).epsilon(1e-12));
  CHECK(s.beta == doctest::Approx(std::atan2(-0.5, 0.2) + 2 * kPi).epsilon(1e-12));
  CHECK(std::abs(s.residual) < 5e-11);
}

TEST_CASE("zero weight matches the closed form across a state sweep") {
  ProblemConfig cfg = config_with_delta(0.0);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    State x{1.0 + rng_unit(rng), 2 * rng_unit(rng) - 1, 2 * rng_unit(rng) - 1,
            0.3 + rng_unit(rng)};
    Costate p{2 * rng_unit(rng) - 1, 2 * rng_unit(rng) - 1, 2 * rng_unit(rng) - 1, 0};
    if (std::hypot(p.p_u, p.p_v) < 1e-3) continue;
    double want = std::atan2(-p.p_v, -p.p_u);
    if (want < 0) want += 2 * kPi;
    SteeringSolution s = optimal_steering(x, p, cfg);
    CHECK(s.beta == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("penalized instances against the reference minimizer") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  struct Case {
    State x;
    Costate p;
    double beta;  // from tests/oracle/frozen_values.py
  };
  const Case cases[] = {
      {{1.0005, 0.05, -0.1, 0.55}, {120.0, 0.3, -0.5, 0.0}, 2.1046802795412485},
      {{1.01, 0.2, -0.15, 0.6}, {5.0, 0.35, -0.45, 0.0}, 2.231392599150626},
      {{1.0 + 1.0e-6, 0.001, -0.002, 0.545}, {135.0, 0.36, -0.54, 0.0}, 1.6594976509737493},
  };
  for (const Case& c : cases) {
    SteeringSolution s = optimal_steering(c.x, c.p, cfg);
    CHECK(s.beta == doctest::Approx(c.beta).epsilon(1e-10));
    CHECK(std::abs(s.residual) < 5e-11);
    CHECK(s.hamiltonian_value ==
          doctest::Approx(hamiltonian(c.x, c.p, s.beta, cfg)).epsilon(1e-14));
  }
}

TEST_CASE("selected angle is the global minimum over the circle") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 40; ++i) {
    State x{1.0 + 0.05 * rng_unit(rng), 0.5 * rng_unit(rng), -0.5 * rng_unit(rng),
            0.4 + 0.6 * rng_unit(rng)};
    Costate p{200 * rng_unit(rng), 2 * rng_unit(rng) - 1, 2 * rng_unit(rng) - 1, 0};
    SteeringSolution s = optimal_steering(x, p, cfg);
    CHECK(std::abs(s.residual) < 5e-11);
    // Selection is over stationary angles.  The quadratic deviation term is
    // anchored at the vertical, so on [0, 2*pi) the raw grid minimum can sit
    // at the wrap itself, where no extremal control lives; compare only when
    // the grid minimum is interior (and therefore a genuine stationary one).
    GridMin g = grid_min_h(x, p, cfg);
    if (g.beta > 0.3 && g.beta < 2 * kPi - 0.3) {
      // The 14400-point grid undershoots the true minimum by at most
      // max|dH/dbeta| * (pi/14400); 1e-6 absolute covers every case drawn.
      CHECK(s.hamiltonian_value <= g.h + 1e-6);
    }
    for (double b : s.candidates) {
      CHECK(s.hamiltonian_value <= hamiltonian(x, p, b, cfg) + 1e-12);
    }
  }
}

TEST_CASE("stationarity residual is the angle slope of H") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  const State x{1.003, 0.1, -0.2, 0.7};
  const Costate p{30.0, 0.25, -0.4, 0.1};
  for (double b : {0.3, 1.2, 1.57, 2.9, 4.4}) {
    const double h = 1e-6;
    double fd = (hamiltonian(x, p, b + h, cfg) - hamiltonian(x, p, b - h, cfg)) / (2 * h);
    CHECK(stationarity_residual(x, p, b, cfg) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("critical angles are sorted, in range, and at most three") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    State x{1.0 + 0.2 * rng_unit(rng), 0.3 * rng_unit(rng), -0.3 * rng_unit(rng),
            0.4 + 0.6 * rng_unit(rng)};
    Costate p{150 * rng_unit(rng), 2 * rng_unit(rng) - 1, 2 * rng_unit(rng) - 1, 0};
    std::vector<double> crit = critical_angles(x, p, cfg);
    CHECK(crit.size() <= 3);
    CHECK(std::is_sorted(crit.begin(), crit.end()));
    for (double b : crit) {
      CHECK(b >= 0.0);
      CHECK(b < 2 * kPi);
    }
  }
}

TEST_CASE("a stationary bracket endpoint is still found") {
  // With p_u = 0 the vertical angle is itself stationary; the root scan must
  // not lose it or the two flanking minima.
  ProblemConfig cfg = config_with_delta(1.0e-5);
  const State x{1.1, 0.0, 0.0, 0.6};
  const Costate p{1.0, 0.0, 0.5, 0.0};
  SteeringSolution s = optimal_steering(x, p, cfg);
  CHECK(std::abs(s.residual) < 5e-11);
  CHECK(s.hamiltonian_value <= grid_min_h(x, p, cfg).h + 1e-6);
  CHECK(s.candidates.size() >= 2);
}

TEST_CASE("candidate list covers every stationary angle") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  const State x{1.01, 0.2, -0.15, 0.6};
  const Costate p{5.0, 0.35, -0.45, 0.0};
  SteeringSolution s = optimal_steering(x, p, cfg);
  for (double b : s.candidates) {
    CHECK(std::abs(stationarity_residual(x, p, b, cfg)) < 5e-11);
  }
  CHECK(std::count_if(s.candidates.begin(), s.candidates.end(), [&](double b) {
          return std::abs(b - s.beta) < 1e-12;
        }) == 1);
}

TEST_CASE("zero primer with no penalty has no defined angle") {
  ProblemConfig cfg = config_with_delta(0.0);
  const State x{1.05, 0.1, -0.1, 0.8};
  const Costate p{0.5, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(optimal_steering(x, p, cfg), SteeringError);
}

TEST_CASE("zero primer with the penalty active steers vertical") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  const State x{1.001, 0.0, -0.01, 0.6};
  const Costate p{10.0, 0.0, 0.0, 0.0};
  SteeringSolution s = optimal_steering(x, p, cfg);
  CHECK(s.beta == doctest::Approx(kPi / 2).epsilon(1e-12));
}
