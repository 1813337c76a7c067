#pragma once

#include "pdg/core.hpp"
#include "pdg/odeint.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pdg {

/// Free parameters of a touchdown-anchored extremal: the costate triple at
/// the landing point (p_m is zero there by transversality).
struct TouchdownTriple {
  double p_r0 = 0;
  double p_u0 = 0;
  double p_v0 = 0;
};

/// Touchdown mass and steering angle completing a triple into a full reverse
/// initial condition with H = 0.
struct TouchdownBoundary {
  double m0 = 0;     ///< nondimensional touchdown mass
  double beta0 = 0;  ///< steering angle at touchdown
  double h_residual = 0;
  double stationarity_residual = 0;
};

struct BoundarySolve {
  bool ok = false;
  TouchdownBoundary boundary;
  std::string reject_reason;
};

/// Closed-form touchdown mass for a zero penalty weight:
///   m0 = T * |(p_u0, p_v0)| / (1 - p_v0 * mu).
double touchdown_mass_unregularized(const TouchdownTriple& t, const ProblemConfig& cfg);

/// Complete a triple: 2-dimensional Newton on {stationarity at the surface,
/// H = 0} for (m0, beta0).  Infeasible triples (nonpositive mass, Newton
/// divergence) are rejected, not thrown.
BoundarySolve touchdown_boundary(const TouchdownTriple& triple, const ProblemConfig& cfg);

/// Envelope limits and integrator setup for reverse-time generation.
struct SamplerOptions {
  double tau_max = 0.65;       ///< reverse-time horizon
  double altitude_cap = 0;     ///< truncate above this altitude (0 = none)
  double mass_cap = 0;         ///< truncate above this nondimensional mass (0 = none)
  IntegratorSettings integrator;
};

struct GenerationResult {
  bool ok = false;
  Trajectory trajectory;  ///< forward time order; last node is touchdown
  std::string reject_reason;
};

/// Integrate the touchdown-anchored reverse-time extremal from the surface
/// and return it in forward time order.  Rejections: infeasible boundary,
/// sub-surface dip, integration failure, empty after truncation.
GenerationResult generate_trajectory(const TouchdownTriple& triple, const SamplerOptions& opts,
                                     const ProblemConfig& cfg);

/// Recipe for a family of trajectories around a nominal triple.
struct SamplingSpec {
  TouchdownTriple nominal;
  double radius_frac = 0.3;  ///< per-component uniform radius as a fraction
  int count = 0;
  std::uint64_t seed = 0;
  SamplerOptions options;
};

/// One supervised pair: state plus the optimal steering angle there, with
/// provenance and the costate for later re-verification.
struct DatasetSample {
  State x;
  double beta = 0;
  Costate p;
  int traj_id = 0;
  double tau = 0;  ///< reverse time of the node (0 = touchdown)
};

struct RejectionRecord {
  int index = 0;
  TouchdownTriple triple;
  std::string reason;
};

struct Dataset {
  std::vector<DatasetSample> samples;
  std::vector<int> train_idx, val_idx, test_idx;
  std::vector<Trajectory> trajectories;
  std::vector<RejectionRecord> rejections;
  SamplingSpec spec;
  int accepted = 0;
};

/// Draw `count` triples uniformly in the per-component box around the
/// nominal, generate each trajectory (deterministically, whatever the thread
/// count), collect (state, angle) pairs at every node, and split 70/15/15 by
/// sample.  Throws NumericalError if more than half the triples reject.
Dataset build_dataset(const SamplingSpec& spec, const ProblemConfig& cfg, int threads = 1);

/// CSV (traj_id,t,r,u,v,m,beta) plus JSON sidecar (spec, seed, rejection log,
/// split indices, per-trajectory flight times).  Costates and trajectories
/// live only in memory; re-reading restores the samples bit-exactly but
/// leaves those fields empty.
void write_dataset(const Dataset& ds, const std::string& csv_path,
                   const std::string& sidecar_path);
Dataset read_dataset(const std::string& csv_path, const std::string& sidecar_path);

}  // namespace pdg
