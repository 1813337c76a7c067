#include "pdg/sampler.hpp"

#include "pdg/core.hpp"
#include "pdg/dynamics.hpp"
#include "pdg/steering.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

using namespace pdg;

namespace {

ProblemConfig config_with_delta(double delta) {
  RegularizationConfig reg;
  reg.delta = delta;
  return make_problem(PhysicalConstants{}, reg);
}

// Touchdown costates of the converged landing extremal at weight 1e-5; the
// sampler's default neighborhood is centered here.
const TouchdownTriple kNominal{135.72769, 0.36542, -0.54333};

SamplingSpec small_spec(int count, std::uint64_t seed) {
  SamplingSpec spec;
  spec.nominal = kNominal;
  spec.radius_frac = 0.3;
  spec.count = count;
  spec.seed = seed;
  spec.options.tau_max = 0.55;
  spec.options.altitude_cap = 0.0099;   // keep the reverse sweep short
  spec.options.mass_cap = 1.2;
  return spec;
}

}  // namespace

TEST_CASE("closed-form touchdown mass at zero weight") {
  ProblemConfig cfg = config_with_delta(0.0);
  // Expected value from tests/oracle/frozen_values.py.
  CHECK(touchdown_mass_unregularized(kNominal, cfg) ==
        doctest::Approx(0.65348136400417001).epsilon(1e-13));
}

TEST_CASE("touchdown completion solves the surface conditions") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  BoundarySolve bs = touchdown_boundary(kNominal, cfg);
  REQUIRE(bs.ok);
  // Expected values from tests/oracle/frozen_values.py.
  CHECK(bs.boundary.m0 == doctest::Approx(0.54243979076651727).epsilon(1e-9));
  CHECK(bs.boundary.beta0 == doctest::Approx(1.571832342660026).epsilon(1e-10));
  CHECK(std::abs(bs.boundary.h_residual) < 1e-10);
  CHECK(std::abs(bs.boundary.stationarity_residual) < 1e-10);

  // Residuals recomputed through the public dynamics must agree.
  State x{1.0, 0.0, 0.0, bs.boundary.m0};
  Costate p{kNominal.p_r0, kNominal.p_u0, kNominal.p_v0, 0.0};
  CHECK(std::abs(hamiltonian(x, p, bs.boundary.beta0, cfg)) < 1e-9);
  CHECK(std::abs(stationarity_residual(x, p, bs.boundary.beta0, cfg)) < 1e-9);

  BoundarySolve bs2 = touchdown_boundary({150.0, 0.40, -0.60}, cfg);
  REQUIRE(bs2.ok);
  CHECK(bs2.boundary.m0 == doctest::Approx(0.57780424787475559).epsilon(1e-9));
  CHECK(bs2.boundary.beta0 == doctest::Approx(1.571860911741082).epsilon(1e-10));
}

TEST_CASE("infeasible triples are rejected, not thrown") {
  // No primer direction, no penalty: the touchdown angle is undefined.
  BoundarySolve bs = touchdown_boundary({10.0, 0.0, 0.0}, config_with_delta(1.0e-5));
  CHECK(!bs.ok);
  CHECK(!bs.reject_reason.empty());

  // Zero weight with p_v at or past 1/mu drives the closed-form mass
  // nonpositive.
  bs = touchdown_boundary({10.0, 0.3, 1.5}, config_with_delta(0.0));
  CHECK(!bs.ok);
  CHECK(bs.reject_reason == "nonpositive touchdown mass");

  // With the penalty active, a positive p_v below 1/mu cannot balance H
  // next to vertical thrust.
  bs = touchdown_boundary({10.0, 0.3, 0.5}, config_with_delta(1.0e-5));
  CHECK(!bs.ok);
  CHECK(bs.reject_reason == "nonpositive touchdown mass");
}

TEST_CASE("a generated trajectory is a touchdown-anchored extremal") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  SamplerOptions opts;
  opts.tau_max = 0.55;
  opts.altitude_cap = 0.0099;
  opts.mass_cap = 1.2;
  GenerationResult gen = generate_trajectory(kNominal, opts, cfg);
  REQUIRE(gen.ok);
  const Trajectory& tr = gen.trajectory;
  REQUIRE(tr.nodes.size() > 50);

  // Forward time order, touchdown last.
  CHECK(std::is_sorted(tr.nodes.begin(), tr.nodes.end(),
                       [](const TrajectoryNode& a, const TrajectoryNode& b) {
                         return a.t < b.t;
                       }));
  const TrajectoryNode& td = tr.nodes.back();
  CHECK(td.x.r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(td.x.u) < 1e-12);
  CHECK(std::abs(td.x.v) < 1e-12);
  CHECK(std::abs(td.p.p_m) < 1e-12);

  for (const TrajectoryNode& n : tr.nodes) {
    CHECK(std::abs(n.hamiltonian) < 1e-6);
    CHECK(std::abs(stationarity_residual(n.x, n.p, n.beta, cfg)) < 5e-10);
    CHECK(n.x.r >= 1.0 - 1e-12);
    CHECK(n.x.r - 1.0 <= opts.altitude_cap + 1e-9);
    CHECK(n.x.m <= opts.mass_cap + 1e-12);
  }
  CHECK(tr.meta.p_r0 == kNominal.p_r0);
  CHECK(tr.meta.p_u0 == kNominal.p_u0);
  CHECK(tr.meta.p_v0 == kNominal.p_v0);
}

TEST_CASE("dataset generation invariants and split arithmetic") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  SamplingSpec spec = small_spec(40, 777);
  Dataset ds = build_dataset(spec, cfg);
  CHECK(ds.accepted + static_cast<int>(ds.rejections.size()) == spec.count);
  CHECK(ds.accepted >= spec.count / 2);
  REQUIRE(!ds.samples.empty());
  CHECK(static_cast<int>(ds.trajectories.size()) == ds.accepted);

  const size_t n = ds.samples.size();
  const size_t n_train = ds.train_idx.size();
  const size_t n_val = ds.val_idx.size();
  const size_t n_test = ds.test_idx.size();
  CHECK(n_train + n_val + n_test == n);
  // 70/15/15 with both rounding halves pinned to the documented convention.
  CHECK(n_train == static_cast<size_t>(std::lround(0.70 * static_cast<double>(n))));
  CHECK(n_val == static_cast<size_t>(std::lround(0.15 * static_cast<double>(n))));

  // The splits partition the sample range with no repeats.
  std::set<int> seen;
  for (const auto* part : {&ds.train_idx, &ds.val_idx, &ds.test_idx}) {
    for (int i : *part) {
      CHECK(i >= 0);
      CHECK(i < static_cast<int>(n));
      CHECK(seen.insert(i).second);
    }
  }

  // Every sample's angle re-derives from its stored state and costate.
  for (size_t i = 0; i < n; i += 7) {
    const DatasetSample& smp = ds.samples[i];
    SteeringSolution sol = optimal_steering(smp.x, smp.p, cfg);
    CHECK(smp.beta == doctest::Approx(sol.beta).epsilon(1e-9));
    REQUIRE(smp.traj_id >= 0);
    REQUIRE(smp.traj_id < static_cast<int>(ds.trajectories.size()));
    CHECK(smp.tau >= 0.0);
  }
}

TEST_CASE("generation is deterministic for any thread count") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  Dataset a = build_dataset(small_spec(24, 990817), cfg, 1);
  Dataset b = build_dataset(small_spec(24, 990817), cfg, 4);
  REQUIRE(a.samples.size() == b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].x.vec() == b.samples[i].x.vec());
    CHECK(a.samples[i].beta == b.samples[i].beta);
    CHECK(a.samples[i].traj_id == b.samples[i].traj_id);
  }
  CHECK(a.train_idx == b.train_idx);
  CHECK(a.val_idx == b.val_idx);
  CHECK(a.test_idx == b.test_idx);

  // A different seed draws a different family.
  Dataset c = build_dataset(small_spec(24, 990818), cfg, 1);
  bool same = a.samples.size() == c.samples.size();
  if (same) {
    same = a.samples[0].x.vec() == c.samples[0].x.vec();
  }
  CHECK(!same);
}

TEST_CASE("dataset round trip restores samples bit exactly") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  Dataset ds = build_dataset(small_spec(12, 5150), cfg);
  const std::string csv = "roundtrip_ds.csv";
  const std::string meta = "roundtrip_ds.meta.json";
  write_dataset(ds, csv, meta);
  Dataset back = read_dataset(csv, meta);
  std::remove(csv.c_str());
  std::remove(meta.c_str());

  REQUIRE(back.samples.size() == ds.samples.size());
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].x.vec() == ds.samples[i].x.vec());
    CHECK(back.samples[i].beta == ds.samples[i].beta);
    CHECK(back.samples[i].traj_id == ds.samples[i].traj_id);
  }
  CHECK(back.train_idx == ds.train_idx);
  CHECK(back.val_idx == ds.val_idx);
  CHECK(back.test_idx == ds.test_idx);
  CHECK(back.accepted == ds.accepted);
  CHECK(back.spec.count == ds.spec.count);
  CHECK(back.spec.seed == ds.spec.seed);
  CHECK(back.spec.nominal.p_r0 == ds.spec.nominal.p_r0);
  // Costates and full trajectories are deliberately memory-only.
  CHECK(back.trajectories.empty());
}

TEST_CASE("a hopeless neighborhood throws after majority rejection") {
  ProblemConfig cfg = config_with_delta(1.0e-5);
  SamplingSpec spec = small_spec(8, 3);
  spec.nominal = {10.0, 0.05, 0.9};  // nearly unit p_v: infeasible masses
  spec.radius_frac = 0.05;
  CHECK_THROWS_AS(build_dataset(spec, cfg), NumericalError);
}
