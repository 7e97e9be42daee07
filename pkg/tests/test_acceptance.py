"""One test per acceptance criterion, each recording a single pass/fail line."""

import time

import numpy as np
import pytest

from deepcycle.analysis import deep_cycle_metrics, dispatch_l1_change, extract_schedule
from deepcycle.emission import (
    DynamicEmissionParams,
    StaticEmissionParams,
    build_emission_blocks,
    dynamic_hourly_emission,
    fit_dynamic,
    fit_static,
    generate_synthetic_samples,
    static_hourly_emission,
)
from deepcycle.engine import SolverOptions, brute_force_uc, solve_milp
from deepcycle.engine.external import solve_external
from deepcycle.formulation import FAMILIES, LEVEL_ORDER, LEVELS, assemble, check_solution
from deepcycle.grid import case_from_dict, split_coal_plant
from conftest import record, tiny_problem
from oracles import block_area_integral, quadrature_hourly

PS = StaticEmissionParams(11.53, 0.86, 1.02)
PD = DynamicEmissionParams(6.12, 0.34, 0.20)
TOL = 1e-6
RUNS = [(w, lv) for w in (False, True) for lv in LEVEL_ORDER]


def unit1_initial(case, cid):
    plant = case.coal_plant(cid)
    return split_coal_plant(plant)[0].initial_output if plant.base.initial_commitment else 0.0


def test_c01_oracle_equivalence():
    worst, solve_time, total_time, mismatch = 0.0, 0.0, 0.0, []
    t_all = time.perf_counter()
    for seed in range(25):
        _, p, _ = tiny_problem(seed)
        assert p.integer.sum() <= 20
        ref = brute_force_uc(p)
        t0 = time.perf_counter()
        sol = solve_milp(p)
        solve_time += time.perf_counter() - t0
        if sol.status != ref.status:
            mismatch.append(seed)
        elif ref.status == "optimal":
            worst = max(worst, abs(sol.objective - ref.objective))
    total_time = time.perf_counter() - t_all
    ok = not mismatch and worst <= 1e-6 and total_time <= 60.0
    record(1, ok, f"25 instances, max |diff| {worst:.2e}, status mismatches {mismatch}, "
                  f"solve {solve_time:.1f} s, with enumeration {total_time:.1f} s")
    assert ok


def test_c02_formulation_integrity(bundled_runs):
    worst, bad = 0.0, []
    for wind, level in RUNS:
        _, p, _, sol, _ = bundled_runs.get(wind, level)
        if sol.x is None:
            bad.append((wind, level, "no solution"))
            continue
        rep = check_solution(p, sol.x, tol=TOL)
        missing = set(FAMILIES) - set(rep.family_max)
        worst = max(worst, rep.max_residual)
        if rep.max_residual > TOL or missing or rep.integrality_max > TOL:
            bad.append((wind, level, rep.max_residual, sorted(missing)))
    ok = not bad
    record(2, ok, f"{len(RUNS)} bundled solutions, max residual {worst:.2e} over {len(FAMILIES)} families; bad {bad}")
    assert ok


def test_c03_closed_form_vs_quadrature():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(500):
        gp, g, gn = rng.uniform(0.0, 600.0, 3)
        val = dynamic_hourly_emission(PS, PD, gp, g, gn)
        ref = quadrature_hourly(PS.f0, PS.f1, PS.N1, PD.b, PD.tau, PD.N2, gp, g, gn)
        worst = max(worst, abs(val - ref) / abs(ref))
    eps = np.finfo(float).eps
    red = max(abs(dynamic_hourly_emission(PS, PD, g, g, g) - static_hourly_emission(PS, g))
              / static_hourly_emission(PS, g) for g in rng.uniform(0.0, 600.0, 200))
    ok = worst <= 1e-7 and red <= 4 * eps
    record(3, ok, f"500 triples, max rel err {worst:.2e}; static reduction max rel diff {red:.1e} (eps {eps:.1e})")
    assert ok


def test_c04_block_area_conservation():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        n2 = rng.uniform(0.05, 2.0)
        pd = DynamicEmissionParams(rng.uniform(0.5, 20.0), rng.uniform(0.05, 0.95), n2)
        bp = np.concatenate([[0.0], np.cumsum(rng.uniform(0.1, 40.0, rng.integers(1, 12)))])
        area = sum(b.rate * b.width for b in build_emission_blocks(pd, bp))
        ref = block_area_integral(pd.b, pd.tau, pd.N2, 0.0, bp[-1])
        worst = max(worst, abs(area - ref) / ref)
    ok = worst <= 1e-9
    record(4, ok, f"100 breakpoint sets, max rel err {worst:.2e}")
    assert ok


def test_c05_fit_recovery_and_coverage():
    g = np.arange(100.0, 601.0, 50.0)
    from deepcycle.emission import EmissionSample

    sfit = fit_static([EmissionSample(x, x, x, float(static_hourly_emission(PS, x))) for x in g])
    s_err = max(abs(a - b) / b for a, b in zip((sfit.params.f0, sfit.params.f1, sfit.params.N1), (PS.f0, PS.f1, PS.N1)))
    dfit = fit_dynamic(generate_synthetic_samples(PS, PD, 600.0, 600, seed=3), PS, threshold=300.0)
    d_err = max(abs(a - b) / b for a, b in zip((dfit.params.b, dfit.params.tau, dfit.params.N2), (PD.b, PD.tau, PD.N2)))

    truth = np.array([PS.f0, PS.f1, PS.N1, PD.b, PD.tau, PD.N2])
    hits = np.zeros(6)
    trials = 200
    for seed in range(trials):
        samples = generate_synthetic_samples(PS, PD, 600.0, 1000, noise_sigma=0.05, seed=seed)
        sf = fit_static(samples)
        df = fit_dynamic(samples, sf.params, threshold=300.0, seed=seed, static_cov=sf.cov)
        est = np.array([sf.params.f0, sf.params.f1, sf.params.N1, df.params.b, df.params.tau, df.params.N2])
        se = np.array([sf.stderr.f0, sf.stderr.f1, sf.stderr.N1, df.stderr.b, df.stderr.tau, df.stderr.N2])
        hits += np.abs(est - truth) <= 3 * se
    cover = hits / trials
    ok = s_err <= 1e-4 and d_err <= 1e-3 and np.all(cover >= 0.95)
    names = ("f0", "f1", "N1", "b", "tau", "N2")
    record(5, ok, f"noiseless static {s_err:.1e}, dynamic {d_err:.1e}; 5% coverage "
                  + " ".join(f"{n}={c:.3f}" for n, c in zip(names, cover)))
    assert ok


def test_c06_complementarity(bundled_runs):
    worst_min, worst_diff = 0.0, 0.0
    for wind in (False, True):
        for level in ("low", "high", "very_high"):
            case, _, idx, sol, _ = bundled_runs.get(wind, level)
            sched = extract_schedule(sol, idx, case, LEVELS[level])
            for c, cid in enumerate(sched.coal_ids):
                a, b = sched.alpha[c, :, 0], sched.beta[c, :, 0]
                gi = sched.g_I[c, :, 0]
                d = np.diff(np.concatenate([[unit1_initial(case, cid)], gi]))
                worst_min = max(worst_min, np.minimum(a, b).max())
                worst_diff = max(worst_diff, np.abs(a - b - d).max())
    ok = worst_min <= TOL and worst_diff <= TOL
    record(6, ok, f"max min(alpha,beta) {worst_min:.2e}, max |alpha-beta-dg_I| {worst_diff:.2e}")
    assert ok


def test_c07_wind_trend(bundled_runs):
    totals = []
    for level in LEVEL_ORDER:
        case, _, idx, sol, _ = bundled_runs.get(True, level)
        totals.append(deep_cycle_metrics(extract_schedule(sol, idx, case, LEVELS[level]), case).total_alpha_beta)
    nonincreasing = all(b <= a + TOL for a, b in zip(totals, totals[1:]))
    ok = nonincreasing and totals[-1] < totals[0] - TOL
    record(7, ok, "sum(alpha+beta) " + " -> ".join(f"{lv}={v:.3f}" for lv, v in zip(LEVEL_ORDER, totals)))
    assert ok


def test_c08_no_wind_dispatch_stable(bundled_runs):
    case, _, idx, sol0, _ = bundled_runs.get(False, "zeros")
    s0 = extract_schedule(sol0, idx, case, LEVELS["zeros"])
    case3, _, idx3, sol3, _ = bundled_runs.get(False, "very_high")
    s3 = extract_schedule(sol3, idx3, case3, LEVELS["very_high"])
    coal = {c.id for c in case.coal_plants}
    others = [g for g in s0.gen_ids if g not in coal]
    energy = sum(s0.energy(g) for g in others)
    l1 = dispatch_l1_change(s0, s3, others)
    g6 = s0.energy("G6")
    ok = l1 <= 0.10 * energy and abs(g6) <= TOL
    record(8, ok, f"non-coal L1 change {l1:.3f} MWh vs 10% of {energy:.3f} MWh; G6 energy at zeros {g6:.2e}")
    assert ok


def test_c09_unit_sequencing(bundled_runs):
    worst_gap, worst_order = 0.0, 0.0
    for wind, level in RUNS:
        case, _, idx, sol, _ = bundled_runs.get(wind, level)
        sched = extract_schedule(sol, idx, case, LEVELS[level])
        for c, cid in enumerate(sched.coal_ids):
            cap = split_coal_plant(case.coal_plant(cid))[0].g_max
            on2 = sched.u_II[c] > 0.5
            if on2.any():
                worst_gap = max(worst_gap, float((cap - sched.g_I[c][on2]).max()))
            worst_order = max(worst_order, float((sched.u_II[c] - sched.u_I[c]).max()))
    ok = worst_gap <= TOL and worst_order <= 0
    record(9, ok, f"max Unit I shortfall with Unit II on {worst_gap:.2e}; max u_II - u_I {worst_order:g}")
    assert ok


def test_c10_performance_and_external_agreement(bundled_runs):
    rows, ok = [], True
    for wind, level in RUNS:
        _, p, _, sol, wall = bundled_runs.get(wind, level)
        good = sol.status == "optimal" and sol.gap <= 1e-4 and wall <= 600.0
        line = f"{'wind' if wind else 'nowind'}/{level} {wall:.0f}s gap {sol.gap:.1e}"
        try:
            ext = solve_external(p, SolverOptions(external_solver="highs", mip_gap=1e-4, time_limit=600))
            diff = abs(ext.objective - sol.objective) / max(1.0, abs(sol.objective))
            good &= diff <= 1e-4 and ext.objective >= sol.bound - TOL and sol.objective >= ext.bound - TOL
            line += f" ext diff {diff:.1e}"
        except Exception as exc:  # a missing external solver fails the criterion, it is not skipped
            good = False
            line += f" external failed: {exc}"
        ok &= good
        rows.append(line)
    record(10, ok, "; ".join(rows))
    assert ok


STORAGE_CASE = {
    "name": "storage_spread", "horizon": 8,
    "network": {"buses": [{"id": 1, "reference": True}], "lines": []},
    "generators": [
        {"id": "B", "bus": 1, "kind": "gas", "g_min": 0, "g_max": 100, "ramp_limit": 100,
         "offer_blocks": [[100, 10]], "initial_commitment": True, "initial_output": 30},
        {"id": "P", "bus": 1, "kind": "gas", "g_min": 0, "g_max": 100, "ramp_limit": 100,
         "offer_blocks": [[100, 50]], "initial_commitment": False, "initial_output": 0},
    ],
    "storages": [{"id": "S", "bus": 1, "power_rating": 20, "energy_rating": 40,
                  "charge_efficiency": 0.9, "discharge_efficiency": 0.9, "initial_energy": 0}],
    "profiles": {"load": [[30], [30], [40], [90], [130], [140], [60], [30]]},
}


def test_c11_storage():
    case = case_from_dict(STORAGE_CASE)
    p, idx = assemble(case)
    sol = solve_milp(p)
    rep = check_solution(p, sol.x, tol=TOL)
    fams = ("10.12", "10.13", "10.14", "10.15", "10.16", "10.17")
    worst = max(rep.family_max.get(f, np.inf) for f in fams)
    gamma, nu = idx.values(sol.x, "gamma")[0, :, 0], idx.values(sol.x, "nu")[0, :, 0]
    overlap = max(0.0, float(np.minimum(gamma, nu).max()))
    used = nu.sum() > 1.0 and gamma.sum() > 1.0
    ok = sol.status == "optimal" and worst <= TOL and overlap <= TOL and used
    record(11, ok, f"storage residual max {worst:.2e}, simultaneous overlap {overlap:.2e}, "
                   f"charged {gamma.sum():.2f} MWh, discharged {nu.sum():.2f} MWh")
    assert ok
