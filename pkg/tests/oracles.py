"""Independent reference implementations used only by the tests.

Nothing here imports the solver or emission code under test.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate


# ---------------------------------------------------------------------------
# dense tableau simplex (two phase, Bland's rule)


def tableau_simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lo=None, hi=None, tol=1e-10):
    """min c'x  s.t.  A_ub x <= b_ub, A_eq x = b_eq, lo <= x <= hi (lo finite).

    Returns (status, x, objective) with status in {"optimal", "infeasible", "unbounded"}.
    Textbook construction: shift to x' = x - lo >= 0, turn finite upper bounds
    into rows, add slacks, then phase 1 with artificials on every row.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    lo = np.zeros(n) if lo is None else np.asarray(lo, dtype=float)
    hi = np.full(n, np.inf) if hi is None else np.asarray(hi, dtype=float)
    if not np.all(np.isfinite(lo)):
        raise ValueError("oracle needs finite lower bounds")
    rows, rhs, kinds = [], [], []
    if A_ub is not None:
        for a, b in zip(np.atleast_2d(A_ub), np.atleast_1d(b_ub)):
            rows.append(a)
            rhs.append(b - a @ lo)
            kinds.append("le")
    if A_eq is not None:
        for a, b in zip(np.atleast_2d(A_eq), np.atleast_1d(b_eq)):
            rows.append(a)
            rhs.append(b - a @ lo)
            kinds.append("eq")
    for j in range(n):
        if np.isfinite(hi[j]):
            e = np.zeros(n)
            e[j] = 1.0
            rows.append(e)
            rhs.append(hi[j] - lo[j])
            kinds.append("le")
    m = len(rows)
    n_slack = sum(k == "le" for k in kinds)
    width = n + n_slack + m
    T = np.zeros((m + 1, width + 1))
    s = 0
    for i, (a, b, kd) in enumerate(zip(rows, rhs, kinds)):
        T[i, :n] = a
        if kd == "le":
            T[i, n + s] = 1.0
            s += 1
        T[i, -1] = b
        if b < 0:
            T[i, :] *= -1.0
        T[i, n + n_slack + i] = 1.0
    basis = list(range(n + n_slack, width))

    def pivot(r, q):
        T[r, :] /= T[r, q]
        for i in range(m + 1):
            if i != r and T[i, q] != 0.0:
                T[i, :] -= T[i, q] * T[r, :]
        basis[r] = q

    def run(allowed):
        while True:
            cand = [j for j in allowed if T[-1, j] < -tol]
            if not cand:
                return "optimal"
            q = min(cand)  # Bland
            ratios = [(T[i, -1] / T[i, q], basis[i], i) for i in range(m) if T[i, q] > tol]
            if not ratios:
                return "unbounded"
            best = min(r[0] for r in ratios)
            r = min((b, i) for v, b, i in ratios if v <= best + tol)[1]
            pivot(r, q)

    # phase 1: minimize the sum of artificials
    T[-1, :] = 0.0
    T[-1, n + n_slack:width] = 1.0
    for i in range(m):
        T[-1, :] -= T[i, :]
    run(list(range(width)))
    if -T[-1, -1] > 1e-7:
        return "infeasible", None, np.nan
    # drive artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n + n_slack:
            for q in range(n + n_slack):
                if abs(T[i, q]) > 1e-9:
                    pivot(i, q)
                    break
    # phase 2
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i in range(m):
        if basis[i] < n and c[basis[i]] != 0.0:
            T[-1, :] -= c[basis[i]] * T[i, :]
    status = run(list(range(n + n_slack)))
    if status == "unbounded":
        return "unbounded", None, -np.inf
    xp = np.zeros(width)
    for i in range(m):
        xp[basis[i]] = T[i, -1]
    x = xp[:n] + lo
    return "optimal", x, float(c @ x)


# ---------------------------------------------------------------------------
# emission quadrature


def hour_trajectory(g_prev, g, g_next, tau):
    """Piecewise-linear output over one hour: half transitions in, flat, half transitions out."""
    half = tau / 2.0
    a = (g_prev + g) / 2.0
    c = (g + g_next) / 2.0

    def out(t):
        if t < half:
            return a + (g - a) * t / half
        if t > 1.0 - half:
            return g + (c - g) * (t - (1.0 - half)) / half
        return g

    return out


def quadrature_hourly(f0, f1, N1, b, tau, N2, g_prev, g, g_next):
    """Integrate static rate f0 + f1*g^N1 along the trajectory plus 2b|dg|^N2 during each half transition."""
    traj = hour_trajectory(g_prev, g, g_next, tau)
    half = tau / 2.0
    rate = lambda t: f0 + f1 * traj(t) ** N1
    pts = [half, 1.0 - half]
    base, _ = integrate.quad(rate, 0.0, 1.0, points=pts, epsabs=1e-13, epsrel=1e-13, limit=200)
    extra = 2.0 * b * abs(g - g_prev) ** N2 * half + 2.0 * b * abs(g_next - g) ** N2 * half
    return base + extra


def block_area_integral(b, tau, N2, lo, hi):
    """Closed form of the integral of b*tau*x^N2 over [lo, hi]."""
    return b * tau * (hi ** (N2 + 1) - lo ** (N2 + 1)) / (N2 + 1)


# ---------------------------------------------------------------------------
# random tiny unit-commitment cases


def tiny_uc_doc(rng: np.random.Generator, with_gas: bool | None = None, with_wind: bool | None = None) -> dict:
    """A 1- or 2-bus case with one coal plant, optional gas unit and optional wind.

    Sized so that the assembled MILP has at most 20 binary columns.
    """
    with_gas = bool(rng.integers(2)) if with_gas is None else with_gas
    with_wind = bool(rng.integers(2)) if with_wind is None else with_wind
    per_slice = 5 + (3 if with_gas else 0)
    T = int(rng.integers(1, 20 // per_slice + 1))
    T = min(T, 4)
    two_bus = bool(rng.integers(2))
    buses = [{"id": 1, "reference": True}] + ([{"id": 2}] if two_bus else [])
    lines = [{"from": 1, "to": 2, "susceptance": 10.0, "capacity": float(rng.uniform(30, 80)), "name": "L1-2"}] if two_bus else []
    gmax = float(rng.uniform(60, 100))
    eol = float(rng.uniform(0.35, 0.6)) * gmax
    gmin = float(rng.uniform(0.1, 0.3)) * gmax
    p1 = float(rng.uniform(5, 20))
    gens = [{
        "id": "C1", "bus": 1, "kind": "coal", "g_min": gmin, "g_max": gmax,
        "ramp_limit": float(rng.uniform(0.3, 1.0)) * gmax,
        "offer_blocks": [[gmax / 2, p1], [gmax / 2, p1 + float(rng.uniform(0, 10))]],
        "no_load_cost": float(rng.uniform(0, 50)), "startup_cost": float(rng.uniform(0, 300)),
        "shutdown_cost": float(rng.uniform(0, 50)), "min_uptime": int(rng.integers(1, 3)),
        "min_downtime": int(rng.integers(1, 3)), "initial_commitment": bool(rng.integers(2)),
        "hours_in_initial_state": int(rng.integers(1, 4)),
    }]
    gens[0]["initial_output"] = float(rng.uniform(gmin, gmax)) if gens[0]["initial_commitment"] else 0.0
    cap = gmax
    if with_gas:
        gg = float(rng.uniform(30, 60))
        gens.append({
            "id": "P1", "bus": 2 if two_bus else 1, "kind": "gas", "g_min": float(rng.uniform(0, 10)),
            "g_max": gg, "ramp_limit": gg, "offer_blocks": [[gg, float(rng.uniform(20, 60))]],
            "no_load_cost": float(rng.uniform(0, 30)), "startup_cost": float(rng.uniform(0, 100)),
            "initial_commitment": False, "initial_output": 0.0, "hours_in_initial_state": 1,
        })
        cap += gg
    wind = None
    if with_wind:
        wmax = float(rng.uniform(5, 20))
        wind = [[float(rng.uniform(0, wmax))] for _ in range(T)]
        gens.append({"id": "W1", "bus": 2 if two_bus else 1, "kind": "wind", "g_max": wmax,
                     "offer_blocks": [[wmax, 0.0]], "initial_output": wind[0][0]})
    total = [float(rng.uniform(0.2, 0.8)) * cap for _ in range(T)]
    if two_bus:
        share = float(rng.uniform(0.2, 0.8))
        load = [[d * (1 - share), d * share] for d in total]
    else:
        load = [[d] for d in total]
    doc = {
        "name": "tiny", "horizon": T, "slice_hours": 1.0,
        "network": {"buses": buses, "lines": lines},
        "generators": gens,
        "coal_plants": [{"generator": "C1", "eol": eol, "ramp_up_cost": float(rng.uniform(0, 20)),
                         "ramp_down_cost": float(rng.uniform(0, 20))}],
        "profiles": {"load": load} | ({"wind": wind} if wind is not None else {}),
        "allow_curtailment": True,
    }
    return doc
