#include "pdg/verify.hpp"

#include "pdg/dynamics.hpp"
#include "pdg/steering.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pdg {

using nlohmann::json;

VerifyReport verify_trajectory(const Trajectory& traj, const ProblemConfig& cfg,
                               const VerifyThresholds& th) {
  if (traj.nodes.empty()) throw ConfigError("verify: trajectory has no nodes");
  VerifyReport report;

  CheckResult ham{"hamiltonian", true, 0, th.hamiltonian, ""};
  CheckResult stat{"stationarity", true, 0, th.stationarity, ""};
  CheckResult mass{"mass_linearity", true, 0, th.mass_linearity, ""};
  const double t0 = traj.nodes.front().t;
  const double m0 = traj.nodes.front().x.m;
  for (std::size_t i = 0; i < traj.nodes.size(); ++i) {
    const TrajectoryNode& n = traj.nodes[i];
    const double h = std::abs(hamiltonian(n.x, n.p, n.beta, cfg));
    if (h > ham.worst) {
      ham.worst = h;
      ham.detail = "node " + std::to_string(i);
    }
    const double s = std::abs(stationarity_residual(n.x, n.p, n.beta, cfg));
    if (s > stat.worst) {
      stat.worst = s;
      stat.detail = "node " + std::to_string(i);
    }
    const double dm = std::abs(n.x.m - (m0 - cfg.mdot * (n.t - t0)));
    if (dm > mass.worst) {
      mass.worst = dm;
      mass.detail = "node " + std::to_string(i);
    }
  }
  ham.pass = ham.worst <= ham.threshold;
  stat.pass = stat.worst <= stat.threshold;
  mass.pass = mass.worst <= mass.threshold;

  const TrajectoryNode& td = traj.nodes.back();
  CheckResult boundary{"boundary", true, 0, th.boundary, "final node"};
  boundary.worst = std::max({std::abs(td.x.r - 1.0), std::abs(td.x.u), std::abs(td.x.v),
                             std::abs(td.p.p_m)});
  boundary.pass = boundary.worst <= boundary.threshold;

  report.checks = {ham, stat, mass, boundary};
  report.pass = ham.pass && stat.pass && mass.pass && boundary.pass;
  return report;
}

std::string verify_report_json(const VerifyReport& report) {
  json j;
  j["pass"] = report.pass;
  j["checks"] = json::array();
  for (const CheckResult& c : report.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"pass", c.pass},
                           {"worst", c.worst},
                           {"threshold", c.threshold},
                           {"detail", c.detail}});
  }
  return j.dump(2) + "\n";
}

std::string verify_report_text(const VerifyReport& report) {
  std::ostringstream out;
  for (const CheckResult& c : report.checks) {
    char line[160];
    std::snprintf(line, sizeof(line), "%s %-14s worst %.3e threshold %.3e %s\n",
                  c.pass ? "PASS" : "FAIL", c.name.c_str(), c.worst, c.threshold,
                  c.detail.c_str());
    out << line;
  }
  out << (report.pass ? "PASS" : "FAIL") << " overall\n";
  return out.str();
}

}  // namespace pdg
