"""Post-processing of solved schedules: dispatch extraction, emission accounting,
deep-cycling metrics and cross-run comparison tables."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emission import DynamicEmissionParams, StaticEmissionParams, dynamic_hourly_emission, static_hourly_emission
from .formulation import LEVEL_ORDER, VariableIndex
from .grid import CaseData, build_branch_susceptance, split_coal_plant

DEEP_TOL = 1e-6


@dataclass
class DispatchSchedule:
    """Solution values arranged as (entity, slice, scenario) arrays."""

    case_name: str
    T: int
    K: int
    probabilities: np.ndarray
    gen_ids: tuple[str, ...]
    committable_ids: tuple[str, ...]
    coal_ids: tuple[str, ...]
    storage_ids: tuple[str, ...]
    bus_ids: tuple[int, ...]
    line_names: tuple[str, ...]
    g: np.ndarray
    u: np.ndarray
    s: np.ndarray
    h: np.ndarray
    g_I: np.ndarray
    g_II: np.ndarray
    u_I: np.ndarray
    u_II: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    nu: np.ndarray
    delta: np.ndarray
    theta: np.ndarray
    flows: np.ndarray
    load: np.ndarray  # (bus, T, K)
    objective: float
    status: str
    ramp_costs_positive: bool = False
    ramp_cost_rank: float = 0.0
    label: str = ""

    def energy(self, gen_id: str, k: int | None = None) -> float:
        """MWh from one generator (probability-weighted over scenarios when k is None)."""
        row = self.g[self.gen_ids.index(gen_id)]
        if k is not None:
            return float(row[:, k].sum())
        return float(row.sum(axis=0) @ self.probabilities)


def extract_schedule(sol, idx: VariableIndex, case: CaseData, level=None) -> DispatchSchedule:
    """Arrange a MILP solution by entity; line flows are recomputed from angles."""
    if sol.x is None or sol.status not in ("optimal", "feasible"):
        raise ValueError(f"no usable solution (status {sol.status})")
    x = np.asarray(sol.x, dtype=float)
    T, K = idx.T, idx.K
    theta = idx.values(x, "theta")
    Bbr = build_branch_susceptance(case.network) * case.network.base_mva
    flows = np.einsum("ln,ntk->ltk", Bbr, theta)
    load = np.stack([case.load_matrix(k).T for k in range(K)], axis=2)
    if level is None:
        positive = any(c.ramp_up_cost > 0 or c.ramp_down_cost > 0 for c in case.coal_plants)
        rank = max([c.ramp_up_cost + c.ramp_down_cost for c in case.coal_plants], default=0.0)
        label = ""
    else:
        positive = level.positive
        rank = level.ru + level.rd
        label = level.label
    return DispatchSchedule(
        case_name=case.name, T=T, K=K,
        probabilities=np.array([s.probability for s in case.scenarios]),
        gen_ids=idx.entities["g"], committable_ids=idx.entities["u"], coal_ids=idx.entities["g_I"],
        storage_ids=idx.entities["delta"], bus_ids=case.network.bus_ids,
        line_names=tuple(l.name or f"line{i}" for i, l in enumerate(case.network.lines)),
        g=idx.values(x, "g"), u=np.round(idx.values(x, "u")), s=np.round(idx.values(x, "s")),
        h=np.round(idx.values(x, "h")), g_I=idx.values(x, "g_I"), g_II=idx.values(x, "g_II"),
        u_I=np.round(idx.values(x, "u_I")), u_II=np.round(idx.values(x, "u_II")),
        alpha=idx.values(x, "alpha"), beta=idx.values(x, "beta"),
        gamma=idx.values(x, "gamma"), nu=idx.values(x, "nu"), delta=idx.values(x, "delta"),
        theta=theta, flows=flows, load=load, objective=float(sol.objective), status=sol.status,
        ramp_costs_positive=positive, ramp_cost_rank=float(rank), label=label,
    )


# ---------------------------------------------------------------------------
# emissions


@dataclass
class EmissionReport:
    coal_ids: tuple[str, ...]
    static: np.ndarray  # (plant, T, K) tCO2 per slice
    dynamic_increment: np.ndarray  # (plant, T, K)
    probabilities: np.ndarray
    carbon_price: float = 0.0
    tau: float | None = None

    @property
    def hourly_total(self) -> np.ndarray:
        return self.static + self.dynamic_increment

    @property
    def plant_totals(self) -> np.ndarray:
        """(plant, K) total tCO2."""
        return self.hourly_total.sum(axis=1)

    @property
    def system_total(self) -> np.ndarray:
        """(K,) total tCO2."""
        return self.plant_totals.sum(axis=0)

    @property
    def expected_total(self) -> float:
        return float(self.system_total @ self.probabilities)

    @property
    def expected_static(self) -> float:
        return float(self.static.sum(axis=(0, 1)) @ self.probabilities)

    @property
    def expected_dynamic(self) -> float:
        return float(self.dynamic_increment.sum(axis=(0, 1)) @ self.probabilities)

    @property
    def carbon_cost(self) -> float:
        return self.carbon_price * self.expected_total


def _boundary_triples(series: np.ndarray, initial: float):
    """(g_prev, g, g_next) per slice: initial output before, hold-last after."""
    prev = np.concatenate([[initial], series[:-1]])
    nxt = np.concatenate([series[1:], [series[-1]]])
    return prev, series, nxt


def emission_accounting(sched: DispatchSchedule, case: CaseData, params=None, carbon_price: float = 0.0,
                        tau: float | None = None) -> EmissionReport:
    """Static and exact dynamic CO2 per coal plant and slice.

    ``params`` maps plant id to ``(StaticEmissionParams, DynamicEmissionParams)``
    and defaults to the case values; ``tau`` overrides the transition time.
    Uses the exact hourly closed form on the plant output, not the step blocks.
    """
    C, T, K = len(sched.coal_ids), sched.T, sched.K
    stat = np.zeros((C, T, K))
    dyn = np.zeros((C, T, K))
    for c, cid in enumerate(sched.coal_ids):
        plant = case.coal_plant(cid)
        ps, pd = (params or {}).get(cid, (plant.static_params, plant.dynamic_params))
        if tau is not None:
            pd = DynamicEmissionParams(pd.b, tau, pd.N2)
        e = sched.gen_ids.index(cid)
        g0 = plant.base.initial_output if plant.base.initial_commitment else 0.0
        for k in range(K):
            series = np.clip(sched.g[e, :, k], 0.0, None)
            gp, g, gn = _boundary_triples(series, g0)
            s_val = np.asarray(static_hourly_emission(ps, g), dtype=float)
            d_val = np.asarray(dynamic_hourly_emission(ps, pd, gp, g, gn), dtype=float)
            on = sched.u[sched.committable_ids.index(cid), :, k] > 0.5
            stat[c, :, k] = np.where(on, s_val, 0.0)
            dyn[c, :, k] = np.where(on, d_val - s_val, 0.0)
    return EmissionReport(sched.coal_ids, stat, dyn, sched.probabilities, carbon_price, tau)


# ---------------------------------------------------------------------------
# deep cycling


@dataclass
class CycleMetrics:
    coal_ids: tuple[str, ...]
    sum_alpha: np.ndarray  # (plant, K)
    sum_beta: np.ndarray
    deep_cycle_slices: np.ndarray  # (plant, K) int
    max_swing: np.ndarray  # (plant, K) largest single-slice |dg| of the plant
    source: str = "solution"
    probabilities: np.ndarray = field(default_factory=lambda: np.ones(1))

    @property
    def total_alpha_beta(self) -> float:
        """Probability-weighted sum of alpha + beta over plants and slices."""
        return float((self.sum_alpha + self.sum_beta).sum(axis=0) @ self.probabilities)


def recompute_alpha_beta(g_I: np.ndarray, g_I0: float) -> tuple[np.ndarray, np.ndarray]:
    """Positive and negative parts of slice-to-slice changes of a (T, ...) series."""
    prev = np.concatenate([np.full((1,) + g_I.shape[1:], g_I0), g_I[:-1]], axis=0)
    d = g_I - prev
    return np.maximum(d, 0.0), np.maximum(-d, 0.0)


def deep_cycle_metrics(sched: DispatchSchedule, case: CaseData) -> CycleMetrics:
    C, K = len(sched.coal_ids), sched.K
    sa, sb = np.zeros((C, K)), np.zeros((C, K))
    deep = np.zeros((C, K), dtype=int)
    swing = np.zeros((C, K))
    for c, cid in enumerate(sched.coal_ids):
        plant = case.coal_plant(cid)
        unit1, _ = split_coal_plant(plant)
        g10 = unit1.initial_output if plant.base.initial_commitment else 0.0
        g0 = plant.base.initial_output if plant.base.initial_commitment else 0.0
        e = sched.gen_ids.index(cid)
        ui = sched.committable_ids.index(cid)
        if sched.ramp_costs_positive:
            a, b = sched.alpha[c], sched.beta[c]
        else:
            a, b = recompute_alpha_beta(sched.g_I[c], g10)
        sa[c], sb[c] = a.sum(axis=0), b.sum(axis=0)
        on = sched.u[ui] > 0.5
        deep[c] = (on & (sched.g_I[c] < unit1.g_max - DEEP_TOL)).sum(axis=0)
        gp = np.concatenate([np.full((1, K), g0), sched.g[e, :-1]], axis=0)
        swing[c] = np.abs(sched.g[e] - gp).max(axis=0)
    return CycleMetrics(sched.coal_ids, sa, sb, deep, swing,
                        "solution" if sched.ramp_costs_positive else "recomputed", sched.probabilities)


# ---------------------------------------------------------------------------
# comparison


def peaker_ids(case: CaseData) -> tuple[str, ...]:
    return tuple(g.id for g in case.committable if g.ramp_limit >= g.g_max)


@dataclass
class ComparisonRow:
    label: str
    objective: float
    total_emission: float
    dynamic_emission: float
    sum_alpha_beta: float
    deep_cycle_slices: int
    peaker_energy: float
    non_coal_energy: float
    energy_by_generator: dict[str, float]
    rank: float = 0.0

    def as_dict(self) -> dict:
        d = {
            "label": self.label, "objective": self.objective, "total_emission_tCO2": self.total_emission,
            "dynamic_emission_tCO2": self.dynamic_emission, "sum_alpha_beta_MW": self.sum_alpha_beta,
            "deep_cycle_slices": self.deep_cycle_slices, "peaker_energy_MWh": self.peaker_energy,
            "non_coal_energy_MWh": self.non_coal_energy,
        }
        d.update({f"energy_{g}_MWh": v for g, v in self.energy_by_generator.items()})
        return d


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]
    trend_violations: list[str]

    def to_csv(self, path) -> None:
        dicts = [r.as_dict() for r in self.rows]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(dicts[0]))
            w.writeheader()
            w.writerows(dicts)

    def to_text(self) -> str:
        cols = ["label", "objective", "total_emission_tCO2", "sum_alpha_beta_MW", "deep_cycle_slices",
                "peaker_energy_MWh"]
        data = [[r.as_dict()[c] for c in cols] for r in self.rows]
        fmt = [[f"{v:.4f}" if isinstance(v, float) else str(v) for v in row] for row in data]
        widths = [max(len(c), *(len(r[i]) for r in fmt)) for i, c in enumerate(cols)]
        lines = ["  ".join(c.rjust(wd) for c, wd in zip(cols, widths))]
        lines += ["  ".join(v.rjust(wd) for v, wd in zip(row, widths)) for row in fmt]
        if self.trend_violations:
            lines.append("trend violations: " + "; ".join(self.trend_violations))
        return "\n".join(lines)


def _rank(label: str, rank: float) -> tuple:
    pos = LEVEL_ORDER.index(label) if label in LEVEL_ORDER else len(LEVEL_ORDER)
    return (rank, pos, label)


def compare_scenarios(runs, case: CaseData, tol: float = 1e-6) -> ComparisonTable:
    """Align runs (label, schedule, emission report, cycle metrics) into one table.

    Rows are ordered by ramp-cost magnitude (ties by label), so the result
    does not depend on input order.  A trend violation is flagged wherever
    sum(alpha + beta) increases with the ramp cost.
    """
    runs = list(runs)
    if len(runs) < 2:
        raise ValueError("need at least two runs to compare")
    T = runs[0][1].T
    if any(r[1].T != T for r in runs):
        raise ValueError("runs cover different horizons")
    peakers = peaker_ids(case)
    coal = {c.id for c in case.coal_plants}
    rows = []
    for label, sched, em, cm in runs:
        energy = {gid: sched.energy(gid) for gid in sched.gen_ids}
        rows.append(ComparisonRow(
            label=label,
            objective=sched.objective,
            total_emission=em.expected_total,
            dynamic_emission=em.expected_dynamic,
            sum_alpha_beta=cm.total_alpha_beta,
            deep_cycle_slices=int(cm.deep_cycle_slices.sum()),
            peaker_energy=sum(energy[p] for p in peakers),
            non_coal_energy=sum(v for g, v in energy.items() if g not in coal),
            energy_by_generator=energy,
            rank=sched.ramp_cost_rank,
        ))
    rows.sort(key=lambda r: _rank(r.label, r.rank))
    viol = []
    for a, b in zip(rows, rows[1:]):
        if b.rank > a.rank and b.sum_alpha_beta > a.sum_alpha_beta + tol:
            viol.append(f"sum(alpha+beta) rises from {a.label} ({a.sum_alpha_beta:.6g}) "
                        f"to {b.label} ({b.sum_alpha_beta:.6g})")
    return ComparisonTable(rows, viol)


def dispatch_l1_change(a: DispatchSchedule, b: DispatchSchedule, gen_ids) -> float:
    """Sum over slices/scenarios (probability-weighted) of |dispatch_a - dispatch_b| for the given units."""
    tot = 0.0
    for gid in gen_ids:
        ia, ib = a.gen_ids.index(gid), b.gen_ids.index(gid)
        tot += float(np.abs(a.g[ia] - b.g[ib]).sum(axis=0) @ a.probabilities)
    return tot


def energy_balance_residual(sched: DispatchSchedule) -> np.ndarray:
    """Per scenario: total generation + discharge - charge - load, summed over slices."""
    gen = sched.g.sum(axis=(0, 1))
    stor = (sched.nu - sched.gamma).sum(axis=(0, 1)) if sched.nu.size else np.zeros(sched.K)
    return gen + stor - sched.load.sum(axis=(0, 1))


# ---------------------------------------------------------------------------
# CSV output


def _write(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(v) -> str:
    return f"{float(v):.9g}"


def write_run_csvs(sched: DispatchSchedule, em: EmissionReport, out_dir) -> list[Path]:
    """dispatch, commitment, coal_units, storage, emissions and flows CSVs for one run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    slices = [(k, t) for k in range(sched.K) for t in range(sched.T)]

    p = out / "dispatch.csv"
    _write(p, ["scenario", "slice", *sched.gen_ids],
           [[k, t, *(_fmt(sched.g[e, t, k]) for e in range(len(sched.gen_ids)))] for k, t in slices])
    paths.append(p)

    p = out / "commitment.csv"
    hdr = ["scenario", "slice"]
    for gid in sched.committable_ids:
        hdr += [f"{gid}_u", f"{gid}_startup", f"{gid}_shutdown"]
    rows = []
    for k, t in slices:
        r = [k, t]
        for e in range(len(sched.committable_ids)):
            r += [int(sched.u[e, t, k]), int(sched.s[e, t, k]), int(sched.h[e, t, k])]
        rows.append(r)
    _write(p, hdr, rows)
    paths.append(p)

    p = out / "coal_units.csv"
    rows = [[k, t, cid, _fmt(sched.g_I[c, t, k]), _fmt(sched.g_II[c, t, k]), int(sched.u_I[c, t, k]),
             int(sched.u_II[c, t, k]), _fmt(sched.alpha[c, t, k]), _fmt(sched.beta[c, t, k])]
            for k, t in slices for c, cid in enumerate(sched.coal_ids)]
    _write(p, ["scenario", "slice", "plant", "unit_I_MW", "unit_II_MW", "u_I", "u_II", "alpha_MW", "beta_MW"], rows)
    paths.append(p)

    p = out / "storage.csv"
    rows = [[k, t, sid, _fmt(sched.gamma[e, t, k]), _fmt(sched.nu[e, t, k]), _fmt(sched.delta[e, t, k])]
            for k, t in slices for e, sid in enumerate(sched.storage_ids)]
    _write(p, ["scenario", "slice", "storage", "charge_MW", "discharge_MW", "energy_MWh"], rows)
    paths.append(p)

    p = out / "emissions.csv"
    rows = [[k, t, cid, _fmt(em.static[c, t, k]), _fmt(em.dynamic_increment[c, t, k]),
             _fmt(em.hourly_total[c, t, k])]
            for k, t in slices for c, cid in enumerate(em.coal_ids)]
    _write(p, ["scenario", "slice", "plant", "static_tCO2", "dynamic_increment_tCO2", "total_tCO2"], rows)
    paths.append(p)

    p = out / "flows.csv"
    _write(p, ["scenario", "slice", *sched.line_names],
           [[k, t, *(_fmt(sched.flows[ell, t, k]) for ell in range(len(sched.line_names)))] for k, t in slices])
    paths.append(p)
    return paths
