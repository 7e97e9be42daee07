"""Static and dynamic CO2 emission models for coal plants.

Static hourly emission is ``f0 + f1*g**N1``.  When output changes, each
hour is split into a ramp-in half transition, a flat middle and a ramp-out
half transition of total width ``tau``; the dynamic model integrates the
static curve along that trajectory and adds ``b*tau*|dg|**N2`` per
transition.  Ramp magnitudes are discretised into step blocks with
area-preserving rates for use as MILP cost curves.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

SAMPLE_COLUMNS = ("g_prev", "g", "g_next", "emission_tCO2")


@dataclass(frozen=True)
class StaticEmissionParams:
    f0: float = 11.53  # tCO2/h
    f1: float = 0.86  # tCO2/h per MW**N1
    N1: float = 1.02


@dataclass(frozen=True)
class DynamicEmissionParams:
    b: float = 6.12  # tCO2/h per MW**N2
    tau: float = 0.34  # h
    N2: float = 0.20


@dataclass(frozen=True)
class EmissionSample:
    g_prev: float
    g: float
    g_next: float
    emission: float
    static_flag: bool | None = None

    def __post_init__(self):
        if self.static_flag is None:
            object.__setattr__(self, "static_flag", self.g_prev == self.g == self.g_next)


@dataclass(frozen=True)
class EmissionBlock:
    lo: float  # MW
    hi: float  # MW
    rate: float  # tCO2 per MW of ramp in this block

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    g0: float
    g1: float

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.t1 == self.t0:
            return np.full_like(t, self.g0)
        return self.g0 + (self.g1 - self.g0) * (t - self.t0) / (self.t1 - self.t0)


# ---------------------------------------------------------------------------
# evaluation


def ramp_fraction(g_from: float, g_to: float, g_max: float, tau: float) -> float:
    if g_max <= 0:
        raise ValueError("g_max must be positive")
    if tau <= 0:
        raise ValueError("tau must be positive")
    return abs(g_to - g_from) / (tau * g_max)


def static_hourly_emission(p: StaticEmissionParams, g):
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ValueError("generation must be non-negative")
    out = p.f0 + p.f1 * g**p.N1
    return float(out) if out.ndim == 0 else out


def transition_profile(g_prev: float, g: float, g_next: float, tau: float) -> tuple[Segment, Segment, Segment]:
    """Piecewise-affine output trajectory over one hour."""
    if not (0 < tau < 1):
        raise ValueError("tau must lie in (0, 1)")
    h = tau / 2
    return (
        Segment(0.0, h, (g_prev + g) / 2, g),
        Segment(h, 1 - h, g, g),
        Segment(1 - h, 1.0, g, (g + g_next) / 2),
    )


def divided_power(a, c, n):
    """(a**(n+1) - c**(n+1)) / (a - c) for a, c >= 0, exact in the a == c limit.

    Written as ``m**n * expm1((n+1)*log1p(r)) / r`` with ``m = max(a, c)`` and
    ``r = (min - m)/m`` so that nearly equal arguments do not cancel.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    m = np.maximum(a, c)
    lo = np.minimum(a, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(m > 0, (lo - m) / np.where(m > 0, m, 1.0), 0.0)
        ratio = np.where(r != 0, np.expm1((n + 1) * np.log1p(r)) / np.where(r != 0, r, 1.0), n + 1.0)
        out = np.where(m > 0, m**n * ratio, 0.0)
    return out


def f0_closed_form(p: StaticEmissionParams, g_prev, g, g_next, tau):
    """Hour integral of the static curve along the transition trajectory."""
    n = p.N1
    g = np.asarray(g, dtype=float)
    up = divided_power((g_next + g) / 2, g, n)
    down = divided_power(g, (g + g_prev) / 2, n)
    brace = -(n + 1) * g**n + 0.5 * up + 0.5 * down
    return p.f0 + p.f1 * g**n + p.f1 * tau / (n + 1) * brace


def dynamic_term(pd: DynamicEmissionParams, g_prev, g, g_next):
    d1 = np.abs(np.asarray(g, dtype=float) - g_prev)
    d2 = np.abs(np.asarray(g_next, dtype=float) - g)
    return pd.b * pd.tau * (d1**pd.N2 + d2**pd.N2)


def dynamic_hourly_emission(ps: StaticEmissionParams, pd: DynamicEmissionParams, g_prev, g, g_next):
    for v in (g_prev, g, g_next):
        if np.any(np.asarray(v) < 0):
            raise ValueError("generation must be non-negative")
    out = f0_closed_form(ps, g_prev, g, g_next, pd.tau) + dynamic_term(pd, g_prev, g, g_next)
    return float(out) if np.ndim(out) == 0 else out


def dynamic_increment(ps, pd, g_prev, g, g_next):
    """Dynamic hourly emission minus the static value at ``g``."""
    return dynamic_hourly_emission(ps, pd, g_prev, g, g_next) - static_hourly_emission(ps, g)


def instantaneous_emission(ps: StaticEmissionParams, pd: DynamicEmissionParams, t, g_prev, g, g_next):
    """Emission rate at time ``t`` within the hour (tCO2/h).

    Each transition half of width tau/2 carries ``2*b*|dg|**N2`` on top of
    the static rate at the trajectory point, which integrates to the
    ``b*tau*|dg|**N2`` term of the hourly model.
    """
    segs = transition_profile(g_prev, g, g_next, pd.tau)
    t = np.asarray(t, dtype=float)
    traj = np.select(
        [t < segs[0].t1, t <= segs[1].t1],
        [segs[0].value(t), segs[1].value(t)],
        segs[2].value(t),
    )
    extra = np.select(
        [t < segs[0].t1, t <= segs[1].t1],
        [2 * pd.b * abs(g - g_prev) ** pd.N2, 0.0],
        2 * pd.b * abs(g_next - g) ** pd.N2,
    )
    return ps.f0 + ps.f1 * traj**ps.N1 + extra


# ---------------------------------------------------------------------------
# step blocks


def build_emission_blocks(pd: DynamicEmissionParams, breakpoints) -> list[EmissionBlock]:
    """Area-preserving step approximation of ``b*tau*d**N2`` over ramp magnitude d."""
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or bp.size < 2:
        raise ValueError("need at least two breakpoints")
    if bp[0] != 0:
        raise ValueError("breakpoints must start at 0")
    if np.any(np.diff(bp) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    rates = pd.b * pd.tau / (pd.N2 + 1) * divided_power(bp[1:], bp[:-1], pd.N2)
    rates = np.maximum.accumulate(rates)  # guards last-ulp wobble only
    blocks = [EmissionBlock(float(a), float(b), float(r)) for a, b, r in zip(bp[:-1], bp[1:], rates)]
    return blocks


def default_breakpoints(ramp_limit: float, n_blocks: int = 4) -> list[float]:
    return list(np.linspace(0.0, ramp_limit, n_blocks + 1))


def block_cost_curve(blocks, carbon_price: float, damage_mult: float) -> tuple[tuple[float, float], ...]:
    """(width MW, price $/MW) pairs: carbon cost of each block plus the damage adder."""
    if damage_mult < 0 or carbon_price < 0:
        raise ValueError("carbon price and damage multiplier must be non-negative")
    return tuple((b.width, carbon_price * b.rate * (1.0 + damage_mult)) for b in blocks)


# ---------------------------------------------------------------------------
# fitting


@dataclass
class StaticFit:
    params: StaticEmissionParams
    stderr: StaticEmissionParams
    residual_norm: float
    n_samples: int
    cov: np.ndarray | None = None  # (f0, f1, N1) covariance

    def to_dict(self) -> dict:
        return {"params": asdict(self.params), "stderr": asdict(self.stderr),
                "residual_norm": self.residual_norm, "n_samples": self.n_samples}


@dataclass
class DynamicFit:
    params: DynamicEmissionParams
    stderr: DynamicEmissionParams
    residual_norm: float
    n_samples: int
    identified: bool = True
    converged: bool = True
    message: str = ""
    starts: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"params": asdict(self.params), "stderr": asdict(self.stderr),
                "residual_norm": self.residual_norm, "n_samples": self.n_samples,
                "identified": self.identified, "converged": self.converged,
                "message": self.message, "start_costs": self.starts}


class FitError(ValueError):
    pass


def _static_inner(g, y, n):
    X = np.column_stack([np.ones_like(g), g**n])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    return coef, float(r @ r)


def _golden(f, a, b, tol=1e-12, max_iter=200):
    phi = (math.sqrt(5) - 1) / 2
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return (a + b) / 2


def fit_static(samples, n_range=(0.05, 4.0)) -> StaticFit:
    """Least squares for ``f0 + f1*g**N1`` on static samples.

    N1 by golden-section search (after a coarse grid scan to bracket the
    minimum); (f0, f1) by linear least squares at each trial N1.
    """
    stat = [s for s in samples if s.static_flag]
    if len(stat) < 3:
        raise FitError(f"need at least 3 static samples, got {len(stat)}")
    g = np.array([s.g for s in stat])
    y = np.array([s.emission for s in stat])
    if np.unique(g).size < 2:
        raise FitError("static samples need at least 2 distinct generation values")
    if np.any(g < 0):
        raise FitError("negative generation in samples")

    grid = np.linspace(n_range[0], n_range[1], 80)
    sse = [_static_inner(g, y, n)[1] for n in grid]
    i = int(np.argmin(sse))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    n = _golden(lambda v: _static_inner(g, y, v)[1], lo, hi)
    (f0, f1), rss = _static_inner(g, y, n)

    gn = g**n
    with np.errstate(divide="ignore", invalid="ignore"):
        glog = np.where(g > 0, gn * np.log(np.where(g > 0, g, 1.0)), 0.0)
    J = np.column_stack([np.ones_like(g), gn, f1 * glog])
    dof = max(g.size - 3, 1)
    s2 = rss / dof
    try:
        cov = s2 * np.linalg.inv(J.T @ J)
        se = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        cov, se = None, np.full(3, np.inf)
    return StaticFit(StaticEmissionParams(float(f0), float(f1), float(n)),
                     StaticEmissionParams(*map(float, se)), math.sqrt(rss), int(g.size), cov)


_TAU_EPS = 1e-6


def _dyn_model(theta, ps, gp, g, gn):
    b, tau, n2 = theta
    d1, d2 = np.abs(g - gp), np.abs(gn - g)
    return f0_closed_form(ps, gp, g, gn, tau) + b * tau * (d1**n2 + d2**n2)


def _dyn_jac(theta, ps, gp, g, gn):
    b, tau, n2 = theta
    d1, d2 = np.abs(g - gp), np.abs(gn - g)
    p1, p2 = d1**n2, d2**n2
    with np.errstate(divide="ignore", invalid="ignore"):
        l1 = np.where(d1 > 0, p1 * np.log(np.where(d1 > 0, d1, 1.0)), 0.0)
        l2 = np.where(d2 > 0, p2 * np.log(np.where(d2 > 0, d2, 1.0)), 0.0)
    # F0 is affine in tau
    dtau = (f0_closed_form(ps, gp, g, gn, 1.0) - f0_closed_form(ps, gp, g, gn, 0.0)) + b * (p1 + p2)
    return np.column_stack([tau * (p1 + p2), dtau, b * tau * (l1 + l2)])


def _static_sensitivity(theta, ps, gp, g, gn):
    """d model / d(f0, f1, N1) by central differences."""
    base = np.array([ps.f0, ps.f1, ps.N1])
    cols = []
    for i in range(3):
        h = 1e-6 * max(1.0, abs(base[i]))
        up, dn = base.copy(), base.copy()
        up[i] += h
        dn[i] -= h
        cols.append((_dyn_model(theta, StaticEmissionParams(*up), gp, g, gn)
                     - _dyn_model(theta, StaticEmissionParams(*dn), gp, g, gn)) / (2 * h))
    return np.column_stack(cols)


def fit_dynamic(samples, ps: StaticEmissionParams, threshold: float, seed: int = 0, n_starts: int = 8,
                min_samples: int = 10, static_cov: np.ndarray | None = None) -> DynamicFit:
    """Box-constrained trust-region fit of (b, tau, N2) on ramping samples below ``threshold``.

    Static parameters are held fixed.  Several seeded starts guard against
    the weak separation of b and tau.  With no ramping samples at all the
    dynamic term cannot be identified: b = 0 is returned with
    ``identified=False``.

    Passing ``static_cov`` (from :class:`StaticFit`) widens the standard
    errors by the first-stage uncertainty, propagated linearly.
    """
    ramp = [s for s in samples if not s.static_flag and s.g < threshold]
    if not ramp:
        nan = float("nan")
        return DynamicFit(DynamicEmissionParams(0.0, nan, nan), DynamicEmissionParams(nan, nan, nan),
                          0.0, 0, identified=False, message="no ramping samples; dynamic term unidentified")
    if len(ramp) < min_samples:
        raise FitError(f"need at least {min_samples} ramping samples below {threshold} MW, got {len(ramp)}")
    gp = np.array([s.g_prev for s in ramp])
    g = np.array([s.g for s in ramp])
    gn = np.array([s.g_next for s in ramp])
    y = np.array([s.emission for s in ramp])

    def resid(th):
        return _dyn_model(th, ps, gp, g, gn) - y

    def jac(th):
        return _dyn_jac(th, ps, gp, g, gn)

    lb = np.array([0.0, _TAU_EPS, 1e-4])
    ub = np.array([np.inf, 1 - _TAU_EPS, 5.0])
    rng = np.random.default_rng(seed)
    starts = [np.array([5.0, 0.3, 0.3])]
    for _ in range(n_starts - 1):
        starts.append(np.array([rng.uniform(0.1, 20.0), rng.uniform(0.05, 0.95), rng.uniform(0.05, 1.5)]))
    best, costs = None, []
    for x0 in starts:
        res = least_squares(resid, x0, jac=jac, bounds=(lb, ub), method="trf",
                            x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        costs.append(float(res.cost))
        if best is None or res.cost < best.cost:
            best = res
    theta = best.x
    r = best.fun
    rss = float(r @ r)
    J = jac(theta)
    dof = max(len(y) - 3, 1)
    try:
        JtJ_inv = np.linalg.inv(J.T @ J)
        cov = rss / dof * JtJ_inv
        if static_cov is not None:
            A = JtJ_inv @ J.T @ _static_sensitivity(theta, ps, gp, g, gn)
            cov = cov + A @ static_cov @ A.T
        se = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        se = np.full(3, np.inf)
    return DynamicFit(
        DynamicEmissionParams(*map(float, theta)),
        DynamicEmissionParams(*map(float, se)),
        math.sqrt(rss),
        len(y),
        identified=bool(np.all(np.isfinite(se))),
        converged=bool(best.status > 0),
        message=str(best.message),
        starts=costs,
    )


# ---------------------------------------------------------------------------
# synthetic data and I/O


def generate_synthetic_samples(ps: StaticEmissionParams, pd: DynamicEmissionParams, g_max: float, count: int,
                               noise_sigma: float = 0.0, seed: int = 0, static_share: float = 0.3,
                               ramp_per_min=(0.015, 0.05)) -> list[EmissionSample]:
    """Hourly samples: a share of flat hours, the rest ramping triples.

    Ramp magnitudes are drawn up to ``rate * 60 * tau * g_max`` with the
    per-minute rate uniform in ``ramp_per_min`` (fraction of g_max), then
    clipped to [0, g_max].  Noise is Gaussian with standard deviation
    ``noise_sigma`` times the mean noiseless emission of the batch.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(seed)
    if count == 0:
        return []
    is_static = rng.random(count) < static_share
    g = rng.uniform(0.05 * g_max, g_max, count)
    rate = rng.uniform(*ramp_per_min, size=(count, 2))
    span = rate * 60 * pd.tau * g_max
    d = rng.uniform(-1.0, 1.0, size=(count, 2)) * span
    gp = np.clip(g - d[:, 0], 0, g_max)
    gn = np.clip(g + d[:, 1], 0, g_max)
    gp[is_static] = g[is_static]
    gn[is_static] = g[is_static]
    clean = np.asarray(dynamic_hourly_emission(ps, pd, gp, g, gn), dtype=float)
    noise = rng.normal(0.0, 1.0, count) * noise_sigma * clean.mean()
    em = np.maximum(clean + noise, 0.0)
    return [EmissionSample(float(a), float(b), float(c), float(e)) for a, b, c, e in zip(gp, g, gn, em)]


def write_samples_csv(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SAMPLE_COLUMNS)
        for s in samples:
            w.writerow([repr(s.g_prev), repr(s.g), repr(s.g_next), repr(s.emission)])


def read_samples_csv(path) -> list[EmissionSample]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SAMPLE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        out = []
        for i, row in enumerate(reader, start=2):
            try:
                vals = [float(row[c]) for c in SAMPLE_COLUMNS]
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{i}: {exc}") from exc
            out.append(EmissionSample(*vals))
    return out


def fit_report(static: StaticFit | None, dynamic: DynamicFit | None, **extra) -> str:
    doc = {
        "static": static.to_dict() if static else None,
        "dynamic": dynamic.to_dict() if dynamic else None,
        "dynamic_term": "b*tau*(|g-g_prev|**N2 + |g_next-g|**N2); equals 2*b*|dg|**N2 integrated over each tau/2 half transition",
    }
    doc.update(extra)
    return json.dumps(doc, indent=2, default=_json_default, allow_nan=True)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))
