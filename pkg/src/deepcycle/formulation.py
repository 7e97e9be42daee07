"""Unit-commitment MILP assembly with coal two-unit split and ramp-cost epigraphs.

Rows are tagged with the constraint family they implement:

====== ===========================================================
10.1   nodal power balance (one row per bus)
10.2   horizon energy adequacy (optional)
10.3   coal plant output = Unit I + Unit II
10.4   line flow limits (ranged rows)
10.5   plant ramp limits
10.6   capacity/commitment coupling; Unit I commitment = plant commitment
10.7   Unit II only when Unit I is at its ceiling
10.8   start-up / shut-down logic
10.9   minimum up / down time
10.10  ramp-up / ramp-down envelopes on Unit I
10.11  cost epigraphs (offers, ramp-up cost, ramp-down cost)
10.12  storage energy dynamics
10.13  discharge limited by stored energy
10.14  charge limited by remaining headroom
10.15  discharge rate bounds (column bounds)
10.16  charge rate bounds (column bounds)
10.17  stored energy bounds (column bounds)
10.18  variable domains (column bounds and binaries)
====== ===========================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .emission import EmissionBlock, block_cost_curve, build_emission_blocks, default_breakpoints
from .grid import CaseData, build_bus_susceptance, build_branch_susceptance, offer_segments, split_coal_plant
from .problem import MilpProblem, ResidualReport, check_solution as _check

FAMILIES = tuple(f"10.{i}" for i in range(1, 19))

KINDS = (
    "theta", "g", "g_I", "g_II", "u", "s", "h", "u_I", "u_II",
    "alpha", "beta", "y", "y_alpha", "y_beta", "gamma", "nu", "delta",
)
BINARY_KINDS = frozenset({"u", "s", "h", "u_I", "u_II"})


class CurveError(ValueError):
    pass


@dataclass(frozen=True)
class RampCostLevel:
    """Marginal cost on Unit I ramp-up (alpha) and ramp-down (beta), $/MW.

    ``ru_curve``/``rd_curve`` optionally give convex piecewise curves as
    ``(width MW, price $/MW)`` blocks; they replace the scalar when set.
    """

    label: str
    ru: float = 0.0
    rd: float = 0.0
    ru_curve: tuple[tuple[float, float], ...] | None = None
    rd_curve: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.ru < 0 or self.rd < 0:
            raise ValueError("ramp costs must be non-negative")
        for curve in (self.ru_curve, self.rd_curve):
            if curve is not None:
                _check_convex(curve)

    @property
    def positive(self) -> bool:
        return self.ru > 0 or self.rd > 0 or bool(self.ru_curve) or bool(self.rd_curve)


LEVELS = {
    "zeros": RampCostLevel("zeros", 0.0, 0.0),
    "low": RampCostLevel("low", 15.0, 8.0),
    "high": RampCostLevel("high", 150.0, 80.0),
    "very_high": RampCostLevel("very_high", 450.0, 240.0),
}
LEVEL_ORDER = ("zeros", "low", "high", "very_high")


@dataclass(frozen=True)
class AssemblyOptions:
    include_energy_adequacy: bool = False
    # when set, Unit I ramp curves also carry carbon cost of the dynamic
    # emission blocks, scaled by (1 + damage_mult)
    carbon_price: float | None = None
    damage_mult: float = 0.0
    n_emission_blocks: int = 4


# ---------------------------------------------------------------------------
# variable index


@dataclass(frozen=True)
class VariableIndex:
    """Dense column map ordered by kind, then entity, then slice, then scenario."""

    T: int
    K: int
    entities: dict[str, tuple[str, ...]]
    offsets: dict[str, int]
    n_cols: int

    def col(self, kind: str, entity, t: int, k: int = 0) -> int:
        ents = self.entities[kind]
        e = entity if isinstance(entity, (int, np.integer)) else ents.index(entity)
        if not (0 <= t < self.T and 0 <= k < self.K and 0 <= e < len(ents)):
            raise IndexError((kind, entity, t, k))
        return self.offsets[kind] + (e * self.T + t) * self.K + k

    def block(self, kind: str) -> slice:
        n = len(self.entities[kind]) * self.T * self.K
        return slice(self.offsets[kind], self.offsets[kind] + n)

    def values(self, x: np.ndarray, kind: str) -> np.ndarray:
        """Column values of one kind as an (entity, T, K) array."""
        return np.asarray(x)[self.block(kind)].reshape(len(self.entities[kind]), self.T, self.K)

    def decode(self, j: int) -> tuple[str, str, int, int]:
        for kind in reversed(KINDS):
            off = self.offsets[kind]
            if j >= off and len(self.entities[kind]):
                rel = j - off
                e, rem = divmod(rel, self.T * self.K)
                if e < len(self.entities[kind]):
                    t, k = divmod(rem, self.K)
                    return kind, self.entities[kind][e], t, k
        raise IndexError(j)

    def name(self, j: int) -> str:
        kind, ent, t, k = self.decode(j)
        return f"{kind}:{ent}:t{t}:k{k}"


def index_variables(case: CaseData) -> VariableIndex:
    T, K = case.horizon, len(case.scenarios)
    if T < 1:
        raise ValueError("horizon must be at least one slice")
    gens = tuple(g.id for g in case.generators)
    comm = tuple(g.id for g in case.committable)
    coal = tuple(c.id for c in case.coal_plants)
    stor = tuple(s.id for s in case.storages)
    ents = {
        "theta": tuple(str(b) for b in case.network.bus_ids),
        "g": gens, "g_I": coal, "g_II": coal,
        "u": comm, "s": comm, "h": comm,
        "u_I": coal, "u_II": coal, "alpha": coal, "beta": coal,
        "y": comm, "y_alpha": coal, "y_beta": coal,
        "gamma": stor, "nu": stor, "delta": stor,
    }
    offsets, n = {}, 0
    for kind in KINDS:
        offsets[kind] = n
        n += len(ents[kind]) * T * K
    return VariableIndex(T, K, ents, offsets, n)


def expected_column_count(n_bus: int, n_gen: int, n_wind: int, n_coal: int, n_storage: int, T: int, K: int) -> int:
    """Closed form: T*K*(N + G + 4*G_c + 8*C + 3*S), G_c = non-wind generators."""
    return T * K * (n_bus + n_gen + 4 * (n_gen - n_wind) + 8 * n_coal + 3 * n_storage)


# ---------------------------------------------------------------------------
# piecewise-linear epigraphs


def _check_convex(curve) -> None:
    prices = [p for _, p in curve]
    if any(w <= 0 for w, _ in curve):
        raise CurveError("curve block widths must be positive")
    if any(b < a - 1e-12 for a, b in zip(prices, prices[1:])):
        raise CurveError("curve prices must be non-decreasing (convex)")


def curve_segments(curve) -> list[tuple[float, float]]:
    """(slope, intercept) pairs of a convex block curve given as (width, price)."""
    _check_convex(curve)
    segs, q, c = [], 0.0, 0.0
    for w, p in curve:
        segs.append((p, c - p * q))
        c += w * p
        q += w
    return segs


def build_pwl_epigraph(curve, x_col: int, y_col: int) -> list[tuple[list[int], list[float], float, float]]:
    """Rows ``y - slope*x >= intercept``, one per segment of a convex block curve.

    ``curve`` is a sequence of ``(width, price)`` pairs or objects with
    ``quantity``/``price`` attributes.
    """
    pairs = [(b.quantity, b.price) if hasattr(b, "quantity") else (float(b[0]), float(b[1])) for b in curve]
    if not pairs:
        raise CurveError("empty curve")
    return [([y_col, x_col], [1.0, -slope], icpt, np.inf) for slope, icpt in curve_segments(pairs)]


def ramp_curves(case: CaseData, level: RampCostLevel | None, blocks=None, opts: AssemblyOptions | None = None):
    """Per-coal-plant (alpha curve, beta curve) as (width, price) tuples."""
    opts = opts or AssemblyOptions()
    out = {}
    for c in case.coal_plants:
        if level is None:
            ru, rd, ruc, rdc = c.ramp_up_cost, c.ramp_down_cost, None, None
        else:
            ru, rd, ruc, rdc = level.ru, level.rd, level.ru_curve, level.rd_curve
        width = c.base.ramp_limit
        up = list(ruc) if ruc else [(width, ru)]
        down = list(rdc) if rdc else [(width, rd)]
        if opts.carbon_price:
            bl = None if blocks is None else blocks.get(c.id)
            if bl is None:
                bl = build_emission_blocks(c.dynamic_params, default_breakpoints(width, opts.n_emission_blocks))
            carbon = block_cost_curve(bl, opts.carbon_price, opts.damage_mult)
            up = _add_curves(up, carbon)
            down = _add_curves(down, carbon)
        out[c.id] = (tuple(up), tuple(down))
    return out


def _add_curves(a, b):
    """Pointwise sum of two block curves (union of breakpoints); last blocks extend."""
    ba = np.cumsum([w for w, _ in a])
    bb = np.cumsum([w for w, _ in b])
    pts = np.unique(np.concatenate([ba, bb]))
    out, prev = [], 0.0
    for p in pts:
        mid = (prev + p) / 2
        pa = a[min(int(np.searchsorted(ba, mid)), len(a) - 1)][1]
        pb = b[min(int(np.searchsorted(bb, mid)), len(b) - 1)][1]
        out.append((float(p - prev), float(pa + pb)))
        prev = p
    return out


# ---------------------------------------------------------------------------
# assembly


class _Rows:
    def __init__(self):
        self.r: list[int] = []
        self.c: list[int] = []
        self.v: list[float] = []
        self.lo: list[float] = []
        self.hi: list[float] = []
        self.fam: list[str] = []
        self.ent: list[str] = []
        self.t: list[int] = []
        self.k: list[int] = []

    def add(self, cols, vals, lo, hi, fam, ent, t, k):
        i = len(self.lo)
        self.r.extend([i] * len(cols))
        self.c.extend(cols)
        self.v.extend(vals)
        self.lo.append(lo)
        self.hi.append(hi)
        self.fam.append(fam)
        self.ent.append(str(ent))
        self.t.append(t)
        self.k.append(k)


def assemble(case: CaseData, blocks=None, level: RampCostLevel | None = None,
             opts: AssemblyOptions | None = None) -> tuple[MilpProblem, VariableIndex]:
    """Build the full commitment/dispatch MILP for every slice and scenario.

    ``level`` overrides the ramp costs stored in the case.  ``blocks`` maps
    coal plant id to emission blocks used when ``opts.carbon_price`` is set
    (defaults to equal-width blocks up to the plant ramp limit).
    """
    opts = opts or AssemblyOptions()
    idx = index_variables(case)
    T, K = idx.T, idx.K
    n = idx.n_cols
    net = case.network
    base = net.base_mva
    Bbus = build_bus_susceptance(net) * base
    Bbr = build_branch_susceptance(net) * base
    bus_pos = {b: i for i, b in enumerate(net.bus_ids)}
    lam = np.asarray(case.slice_hours, dtype=float)
    gens = case.generators
    comm = case.committable
    coal = case.coal_plants
    stor = case.storages
    curves = ramp_curves(case, level, blocks, opts)
    splits = {c.id: split_coal_plant(c) for c in coal}

    c = np.zeros(n)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    integer = np.zeros(n, dtype=bool)
    col_family = np.full(n, "10.18", dtype=object)

    def cols(kind):
        return idx.block(kind)

    # domains
    th = cols("theta")
    lo[th], hi[th] = -np.inf, np.inf
    ref = net.reference_position
    for t in range(T):
        for k in range(K):
            j = idx.col("theta", ref, t, k)
            lo[j] = hi[j] = 0.0
    for kind in BINARY_KINDS:
        sl = cols(kind)
        hi[sl] = 1.0
        integer[sl] = True

    wind_ids = [g.id for g in case.wind_units]
    for e, g in enumerate(gens):
        for t in range(T):
            for k in range(K):
                j = idx.col("g", e, t, k)
                if g.is_wind:
                    w = case.wind_matrix(k)[t, wind_ids.index(g.id)]
                    lo[j] = 0.0 if case.allow_curtailment else w
                    hi[j] = w
                else:
                    hi[j] = g.g_max
    for e, cp in enumerate(coal):
        u1, u2 = splits[cp.id]
        for t in range(T):
            for k in range(K):
                hi[idx.col("g_I", e, t, k)] = u1.g_max
                hi[idx.col("g_II", e, t, k)] = u2.g_max
    for e, g in enumerate(comm):
        if any(b.price < 0 for b in g.offer_blocks):
            for t in range(T):
                for k in range(K):
                    lo[idx.col("y", e, t, k)] = -np.inf
        # initial must-stay periods
        if g.initial_commitment:
            keep = max(g.min_uptime - g.hours_in_initial_state, 0)
        else:
            keep = max(g.min_downtime - g.hours_in_initial_state, 0)
        for t in range(min(keep, T)):
            for k in range(K):
                j = idx.col("u", e, t, k)
                lo[j] = hi[j] = 1.0 if g.initial_commitment else 0.0
    for e, s in enumerate(stor):
        for t in range(T):
            for k in range(K):
                jn, jg, jd = idx.col("nu", e, t, k), idx.col("gamma", e, t, k), idx.col("delta", e, t, k)
                hi[jn] = s.power_rating
                hi[jg] = s.power_rating
                hi[jd] = s.energy_rating
                col_family[jn], col_family[jg], col_family[jd] = "10.15", "10.16", "10.17"
            # initial stored energy
            for k in range(K):
                j = idx.col("delta", e, 0, k)
                lo[j] = hi[j] = s.initial_energy

    rows = _Rows()
    comm_pos = {g.id: e for e, g in enumerate(comm)}
    gen_pos = {g.id: e for e, g in enumerate(gens)}

    for k in range(K):
        pr = case.scenarios[k].probability
        load = case.load_matrix(k)

        # objective
        for e, g in enumerate(comm):
            for t in range(T):
                c[idx.col("y", e, t, k)] += pr * lam[t]
                c[idx.col("u", e, t, k)] += pr * lam[t] * g.no_load_cost
                c[idx.col("s", e, t, k)] += pr * g.startup_cost
                c[idx.col("h", e, t, k)] += pr * g.shutdown_cost
        for e, cp in enumerate(coal):
            for t in range(T):
                c[idx.col("y_alpha", e, t, k)] += pr
                c[idx.col("y_beta", e, t, k)] += pr

        for t in range(T):
            # 10.1 nodal balance
            for b, bid in enumerate(net.bus_ids):
                cc, vv = [], []
                for e, g in enumerate(gens):
                    if g.bus == bid:
                        cc.append(idx.col("g", e, t, k))
                        vv.append(1.0)
                row = Bbus[b]
                for j in np.flatnonzero(row):
                    cc.append(idx.col("theta", int(j), t, k))
                    vv.append(-row[j])
                for e, s in enumerate(stor):
                    if s.bus == bid:
                        cc += [idx.col("nu", e, t, k), idx.col("gamma", e, t, k)]
                        vv += [1.0, -1.0]
                rows.add(cc, vv, load[t, b], load[t, b], "10.1", f"bus{bid}", t, k)

            # 10.4 line limits
            for ell, line in enumerate(net.lines):
                r = Bbr[ell]
                nz = np.flatnonzero(r)
                rows.add([idx.col("theta", int(j), t, k) for j in nz], list(r[nz]),
                         -line.capacity, line.capacity, "10.4", line.name or f"line{ell}", t, k)

        # 10.2 optional horizon energy adequacy
        if opts.include_energy_adequacy:
            cc = [idx.col("g", e, t, k) for e in range(len(gens)) for t in range(T)]
            rows.add(cc, [1.0] * len(cc), float(load.sum()), float(load.sum()), "10.2", "system", -1, k)

        for g in comm:
            e = comm_pos[g.id]
            eg = gen_pos[g.id]
            u0 = 1.0 if g.initial_commitment else 0.0
            g0 = g.initial_output if g.initial_commitment else 0.0
            for t in range(T):
                jg = idx.col("g", eg, t, k)
                ju = idx.col("u", e, t, k)
                # 10.5 ramp limits
                if t == 0:
                    rows.add([jg], [1.0], g0 - g.ramp_limit, g0 + g.ramp_limit, "10.5", g.id, t, k)
                else:
                    rows.add([jg, idx.col("g", eg, t - 1, k)], [1.0, -1.0], -g.ramp_limit, g.ramp_limit,
                             "10.5", g.id, t, k)
                # 10.6 capacity coupling
                rows.add([jg, ju], [1.0, -g.g_max], -np.inf, 0.0, "10.6", g.id, t, k)
                rows.add([jg, ju], [1.0, -g.g_min], 0.0, np.inf, "10.6", g.id, t, k)
                # 10.8 start/stop logic
                js, jh = idx.col("s", e, t, k), idx.col("h", e, t, k)
                if t == 0:
                    rows.add([ju, js], [1.0, -1.0], -np.inf, u0, "10.8", g.id, t, k)
                    rows.add([ju, jh], [-1.0, -1.0], -np.inf, -u0, "10.8", g.id, t, k)
                else:
                    jp = idx.col("u", e, t - 1, k)
                    rows.add([ju, jp, js], [1.0, -1.0, -1.0], -np.inf, 0.0, "10.8", g.id, t, k)
                    rows.add([jp, ju, jh], [1.0, -1.0, -1.0], -np.inf, 0.0, "10.8", g.id, t, k)
                # 10.9 minimum up/down (window truncated at the horizon start)
                up = [idx.col("s", e, j, k) for j in range(max(0, t - g.min_uptime + 1), t + 1)]
                rows.add(up + [ju], [1.0] * len(up) + [-1.0], -np.inf, 0.0, "10.9", g.id, t, k)
                dn = [idx.col("h", e, j, k) for j in range(max(0, t - g.min_downtime + 1), t + 1)]
                rows.add(dn + [ju], [1.0] * len(dn) + [1.0], -np.inf, 1.0, "10.9", g.id, t, k)
                # 10.11 offer epigraph
                for cc, vv, l, h in build_pwl_epigraph(g.offer_blocks, jg, idx.col("y", e, t, k)):
                    rows.add(cc, vv, l, h, "10.11", g.id, t, k)

        for e, cp in enumerate(coal):
            u1, u2 = splits[cp.id]
            eg = gen_pos[cp.id]
            ec = comm_pos[cp.id]
            up_curve, down_curve = curves[cp.id]
            g1_0 = u1.initial_output if cp.base.initial_commitment else 0.0
            for t in range(T):
                jg = idx.col("g", eg, t, k)
                j1, j2 = idx.col("g_I", e, t, k), idx.col("g_II", e, t, k)
                ju1, ju2 = idx.col("u_I", e, t, k), idx.col("u_II", e, t, k)
                ja, jb = idx.col("alpha", e, t, k), idx.col("beta", e, t, k)
                # 10.3 split
                rows.add([jg, j1, j2], [1.0, -1.0, -1.0], 0.0, 0.0, "10.3", cp.id, t, k)
                # 10.6 unit coupling; Unit I commitment follows the plant
                rows.add([j1, ju1], [1.0, -u1.g_max], -np.inf, 0.0, "10.6", u1.id, t, k)
                rows.add([j1, ju1], [1.0, -u1.g_min], 0.0, np.inf, "10.6", u1.id, t, k)
                rows.add([j2, ju2], [1.0, -u2.g_max], -np.inf, 0.0, "10.6", u2.id, t, k)
                rows.add([j2, ju2], [1.0, -u2.g_min], 0.0, np.inf, "10.6", u2.id, t, k)
                rows.add([ju1, idx.col("u", ec, t, k)], [1.0, -1.0], 0.0, 0.0, "10.6", u1.id, t, k)
                # 10.7 sequencing
                rows.add([ju2, j1], [cp.eol, -1.0], -np.inf, 0.0, "10.7", cp.id, t, k)
                # 10.10 ramp envelopes on Unit I
                if t == 0:
                    rows.add([ja, j1], [-1.0, 1.0], -np.inf, g1_0, "10.10", u1.id, t, k)
                    rows.add([jb, j1], [-1.0, -1.0], -np.inf, -g1_0, "10.10", u1.id, t, k)
                else:
                    jp = idx.col("g_I", e, t - 1, k)
                    rows.add([ja, j1, jp], [-1.0, 1.0, -1.0], -np.inf, 0.0, "10.10", u1.id, t, k)
                    rows.add([jb, j1, jp], [-1.0, -1.0, 1.0], -np.inf, 0.0, "10.10", u1.id, t, k)
                # 10.11 ramp-cost epigraphs
                for cc, vv, l, h in build_pwl_epigraph(up_curve, ja, idx.col("y_alpha", e, t, k)):
                    rows.add(cc, vv, l, h, "10.11", f"{cp.id}.alpha", t, k)
                for cc, vv, l, h in build_pwl_epigraph(down_curve, jb, idx.col("y_beta", e, t, k)):
                    rows.add(cc, vv, l, h, "10.11", f"{cp.id}.beta", t, k)

        for e, s in enumerate(stor):
            for t in range(T):
                jg, jn, jd = idx.col("gamma", e, t, k), idx.col("nu", e, t, k), idx.col("delta", e, t, k)
                # 10.12 dynamics: delta[t+1] = delta[t] + (eC*gamma - nu/eD)*lambda
                if t + 1 < T:
                    rows.add([idx.col("delta", e, t + 1, k), jd, jg, jn],
                             [1.0, -1.0, -s.charge_efficiency * lam[t], lam[t] / s.discharge_efficiency],
                             0.0, 0.0, "10.12", s.id, t, k)
                # 10.13 discharge within stored energy
                rows.add([jn, jd], [lam[t], -s.discharge_efficiency], -np.inf, 0.0, "10.13", s.id, t, k)
                # 10.14 charge within headroom
                rows.add([jg, jd], [s.charge_efficiency * lam[t], 1.0], -np.inf, s.energy_rating,
                         "10.14", s.id, t, k)

    m = len(rows.lo)
    A = sp.csr_matrix((rows.v, (rows.r, rows.c)), shape=(m, n))
    A.sum_duplicates()
    row_names = tuple(f"{f}:{e}:t{t}:k{k}" for f, e, t, k in zip(rows.fam, rows.ent, rows.t, rows.k))
    col_names = tuple(idx.name(j) for j in range(n))
    label = level.label if level is not None else "case"
    prob = MilpProblem(
        c=c, A=A,
        row_lo=np.array(rows.lo, dtype=float), row_hi=np.array(rows.hi, dtype=float),
        col_lo=lo, col_hi=hi, integer=integer,
        row_names=row_names, col_names=col_names,
        row_family=np.array(rows.fam, dtype=object), col_family=col_family,
        row_entity=tuple(rows.ent), row_t=np.array(rows.t, dtype=int), row_k=np.array(rows.k, dtype=int),
        name=f"{case.name}_{label}",
    )
    return prob, idx


def check_solution(problem: MilpProblem, x, tol: float = 1e-6) -> ResidualReport:
    """Residual report covering every constraint family, including empty ones."""
    return _check(problem, x, tol=tol, families=FAMILIES)


def objective_breakdown(problem: MilpProblem, idx: VariableIndex, x) -> dict[str, float]:
    """Objective split into offer, no-load, start-up, shut-down and ramp-cost parts."""
    x = np.asarray(x, dtype=float)
    out = {}
    for name, kinds in (("energy", ("y",)), ("no_load", ("u",)), ("startup", ("s",)),
                        ("shutdown", ("h",)), ("ramp", ("y_alpha", "y_beta"))):
        out[name] = float(sum(problem.c[idx.block(kd)] @ x[idx.block(kd)] for kd in kinds))
    out["total"] = float(problem.c @ x + problem.objective_offset)
    return out
