#pragma once

#include "pdg/core.hpp"
#include "pdg/odeint.hpp"

#include <string>
#include <vector>

namespace pdg {

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0;  ///< largest violation magnitude observed
  double threshold = 0;
  std::string detail;
};

struct VerifyThresholds {
  double hamiltonian = 1.0e-6;     ///< |H| at every node
  double stationarity = 1.0e-9;    ///< steering optimality residual at every node
  double mass_linearity = 1.0e-9;  ///< deviation from the constant-flow mass line
  double boundary = 1.0e-6;        ///< touchdown state and p_m at the final node
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool pass = false;
};

/// Necessary-condition audit of a forward-time extremal (touchdown at the
/// last node).  H and the stationarity residual are recomputed from the
/// stored state/costate/angle columns, not trusted from the file.
VerifyReport verify_trajectory(const Trajectory& traj, const ProblemConfig& cfg,
                               const VerifyThresholds& thresholds = {});

std::string verify_report_json(const VerifyReport& report);

/// One line per check, pass/fail with the worst value against its threshold.
std::string verify_report_text(const VerifyReport& report);

}  // namespace pdg
