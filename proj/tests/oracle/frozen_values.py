#!/usr/bin/env python3
# Regenerates the frozen reference numbers pinned in the C++ test suite.
#
# Everything here is an independent reimplementation on scipy/numpy: the
# dynamics, the pointwise steering minimization, the touchdown completion,
# and the two-point boundary solves are written from the model definition,
# not ported from src/.  Run it and diff against the constants in
# tests/test_*.cpp when touching the physics.
#
#   python3 tests/oracle/frozen_values.py
#
# Requires numpy + scipy.  Not wired into the build on purpose: the C++
# tests must stay self-contained.

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, root

# --- mission constants (mirrors the defaults in core.cpp) -------------------
R0 = 1.738e6          # lunar radius, m
MU = 4.9028e12        # gravitational parameter, m^3/s^2
THRUST = 1500.0       # N
ISP = 300.0           # s
GE = 9.81             # m/s^2
M0 = 600.0            # kg

TU = np.sqrt(R0 ** 3 / MU)        # time unit, s
VU = np.sqrt(MU / R0)             # speed unit, m/s
THAT = THRUST * R0 ** 2 / (M0 * MU)
MDOT = (THRUST / (ISP * GE)) * TU / M0

EPS = 1.0e-8
TWO_PI = 2.0 * np.pi


def g17(x):
    return f"{x:.17g}"


# --- penalty and Hamiltonian -------------------------------------------------

def slayer(r):
    # radial layer width, floored away from zero below the surface
    return max(r - 1.0, -0.5 * EPS) + EPS


def penalty(r, beta, delta):
    s = slayer(r)
    g = beta - np.pi / 2
    e = np.exp(1.0 - r)
    value = 0.5 * delta * e * g * g / s
    d_dr = -0.5 * delta * e * g * g * (s + 1.0) / (s * s)
    return value, d_dr


def state_rhs(x, beta):
    r, u, v, m = x
    am = THAT / m
    return np.array([v,
                     -u * v / r + am * np.cos(beta),
                     u * u / r - 1.0 / r ** 2 + am * np.sin(beta),
                     -MDOT])


def hamiltonian(x, p, beta, delta):
    dx = state_rhs(x, beta)
    val, _ = penalty(x[0], beta, delta)
    return float(np.dot(p, dx) + 1.0 + val)


def costate_rhs(x, p, beta, delta):
    r, u, v, m = x
    pr, pu, pv, pm = p
    _, dpen = penalty(r, beta, delta)
    dH_dr = pu * (u * v / r ** 2) + pv * (-(u * u) / r ** 2 + 2.0 / r ** 3) + dpen
    return np.array([-dH_dr,
                     (pu * v - 2.0 * pv * u) / r,
                     pu * u / r - pr,
                     (THAT / m ** 2) * (pu * np.cos(beta) + pv * np.sin(beta))])


# --- pointwise steering ------------------------------------------------------

def stationarity(x, p, beta, delta):
    r, _, _, m = x
    am = THAT / m
    g = beta - np.pi / 2
    k = delta * np.exp(1.0 - r) / slayer(r)
    return am * (-p[1] * np.sin(beta) + p[2] * np.cos(beta)) + k * g


def beta_opt(x, p, delta):
    f = lambda b: stationarity(x, p, b, delta)
    grid = np.linspace(0.0, TWO_PI, 1441)
    vals = np.array([f(b) for b in grid])
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15))
    if not roots:
        raise RuntimeError("no stationary angle")
    hs = [hamiltonian(x, p, b, delta) for b in roots]
    best = min(hs)
    cands = [b for b, h in zip(roots, hs) if h - best < 1e-13]
    return min(cands, key=lambda b: abs(b - np.pi / 2))


# --- touchdown completion ----------------------------------------------------

def touchdown_mass_closed_form(pu, pv):
    return THAT * np.hypot(pu, pv) / (1.0 - pv)


def touchdown_boundary(pr, pu, pv, delta):
    def eqs(z):
        m, beta = z
        x = np.array([1.0, 0.0, 0.0, m])
        p = np.array([pr, pu, pv, 0.0])
        return [stationarity(x, p, beta, delta),
                hamiltonian(x, p, beta, delta)]

    z0 = [touchdown_mass_closed_form(pu, pv), np.pi / 2]
    sol = root(eqs, z0, method="hybr", tol=1e-14)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.x


# --- extremal propagation and shooting --------------------------------------

def extremal_rhs(t, y, delta):
    x, p = y[:4], y[4:8]
    beta = beta_opt(x, p, delta)
    return np.concatenate([state_rhs(x, beta), costate_rhs(x, p, beta, delta)])


X0 = np.array([1753.0e3 / R0, 1679.5 / VU, 0.0, 1.0])


def shoot(p0, tf, delta):
    y0 = np.concatenate([X0, p0])
    sol = solve_ivp(extremal_rhs, (0.0, tf), y0, method="DOP853",
                    rtol=1e-11, atol=1e-13, args=(delta,))
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:, -1]


def defect(q, delta):
    ye = shoot(q[:4], q[4], delta)
    beta = beta_opt(ye[:4], ye[4:8], delta)
    return np.array([ye[0] - 1.0, ye[1], ye[2], ye[7],
                     hamiltonian(ye[:4], ye[4:8], beta, delta)])


# --- report ------------------------------------------------------------------

def main():
    print("== scaling ==")
    print("speed_unit_ms", g17(VU))
    print("time_unit_s", g17(TU))
    print("thrust_accel", g17(THAT))
    print("mass_rate", g17(MDOT))

    print()
    print("== dynamics: point A (off-surface, no penalty) ==")
    xa = np.array([1.05, 0.4, -0.3, 0.8])
    pa = np.array([0.7, -0.2, 0.5, 0.1])
    ba = 2.0
    print("state_rhs", [g17(v) for v in state_rhs(xa, ba)])
    print("H", g17(hamiltonian(xa, pa, ba, 0.0)))
    print("costate_rhs", [g17(v) for v in costate_rhs(xa, pa, ba, 0.0)])

    print()
    print("== dynamics: point B (near-surface, delta 1e-5) ==")
    xb = np.array([1.0005, 0.05, -0.1, 0.55])
    pb = np.array([120.0, 0.3, -0.5, 0.0])
    bb = 1.65
    val, d_dr = penalty(xb[0], bb, 1e-5)
    print("penalty", g17(val), "d_dr", g17(d_dr))
    print("H", g17(hamiltonian(xb, pb, bb, 1e-5)))
    print("costate_rhs", [g17(v) for v in costate_rhs(xb, pb, bb, 1e-5)])

    print()
    print("== steering ==")
    print("A beta* (delta 0)", g17(beta_opt(xa, pa, 0.0)))
    print("B beta* (delta 1e-5)", g17(beta_opt(xb, pb, 1e-5)))
    xc = np.array([1.01, 0.2, -0.15, 0.6])
    pc = np.array([5.0, 0.35, -0.45, 0.0])
    print("C beta* (delta 1e-5)", g17(beta_opt(xc, pc, 1e-5)))
    xd = np.array([1.0 + 1.0e-6, 0.001, -0.002, 0.545])
    pd = np.array([135.0, 0.36, -0.54, 0.0])
    print("D beta* (delta 1e-5, strong gain)", g17(beta_opt(xd, pd, 1e-5)))

    print()
    print("== touchdown completion ==")
    tri = (135.72769, 0.36542, -0.54333)
    print("closed-form m0 (delta 0)", g17(touchdown_mass_closed_form(tri[1], tri[2])))
    m0, b0 = touchdown_boundary(*tri, 1e-5)
    print("delta 1e-5 m0", g17(m0), "beta0", g17(b0))
    tri2 = (150.0, 0.40, -0.60)
    m0b, b0b = touchdown_boundary(*tri2, 1e-5)
    print("second triple m0", g17(m0b), "beta0", g17(b0b))

    print()
    print("== two-point boundary solves (defect at the pinned solutions) ==")
    q0 = np.array([0.59065054882918022, 0.33006863079055038,
                   -0.010828356330134785, 0.55884778208799879,
                   0.51885576121241028])
    print("delta 0     |defect|", np.abs(defect(q0, 0.0)).max())
    q1 = np.array([0.4899529879, 0.3298739806, -0.0242548285,
                   0.5592730183, 0.5205269000348165])
    print("delta 1e-5  |defect|", np.abs(defect(q1, 1e-5)).max())


if __name__ == "__main__":
    main()
