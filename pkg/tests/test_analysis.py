import numpy as np
import pytest

from deepcycle.analysis import (
    compare_scenarios,
    deep_cycle_metrics,
    dispatch_l1_change,
    emission_accounting,
    energy_balance_residual,
    extract_schedule,
    recompute_alpha_beta,
    write_run_csvs,
)
from deepcycle.emission import dynamic_hourly_emission, static_hourly_emission
from deepcycle.engine import solve_milp
from deepcycle.formulation import LEVELS, assemble
from deepcycle.grid import case_from_dict
from conftest import tiny_problem

GAS = {"id": "A", "bus": 1, "kind": "gas", "g_min": 0, "g_max": 60, "offer_blocks": [[60, 20]],
       "initial_commitment": False, "initial_output": 0}
COAL = {"id": "C", "bus": 1, "kind": "coal", "g_min": 10, "g_max": 60, "ramp_limit": 60,
        "offer_blocks": [[25, 7], [20, 10], [15, 15]], "initial_commitment": True, "initial_output": 25}


def one_bus(gens, load, coal=()):
    return case_from_dict({
        "name": "one_bus", "horizon": len(load),
        "network": {"buses": [{"id": 1, "reference": True}], "lines": []},
        "generators": list(gens), "coal_plants": list(coal),
        "profiles": {"load": [[d] for d in load]},
    })


def solved(case, level="zeros"):
    p, idx = assemble(case, level=LEVELS[level])
    sol = solve_milp(p)
    return extract_schedule(sol, idx, case, LEVELS[level])


def coal_case(T=8, load=25.0):
    return one_bus([COAL, GAS], [load] * T, coal=[{"generator": "C", "eol": 30}])


def test_extract_single_generator():
    sched = solved(one_bus([GAS], [50]))
    assert sched.g[0, 0, 0] == pytest.approx(50.0, abs=1e-7)
    assert sched.u[0, 0, 0] == 1.0
    assert sched.energy("A") == pytest.approx(50.0, abs=1e-7)


def test_extract_coal_units():
    sched = solved(one_bus([COAL], [25, 25], coal=[{"generator": "C", "eol": 30}]))
    np.testing.assert_allclose(sched.g_I[0, :, 0], 25.0, atol=1e-7)
    np.testing.assert_allclose(sched.g_II[0, :, 0], 0.0, atol=1e-7)
    assert np.all(sched.u_II[0] == 0)


def test_extract_rejects_missing_point():
    case = one_bus([GAS], [50])
    _, idx = assemble(case)

    class Bad:
        status, x, objective = "infeasible", None, np.inf

    with pytest.raises(ValueError):
        extract_schedule(Bad(), idx, case)


@pytest.mark.parametrize("seed", [3, 4, 5, 7, 12, 18])
def test_bus_balance_from_recomputed_flows(seed):
    case, p, idx = tiny_problem(seed)
    sol = solve_milp(p)
    if sol.status != "optimal":
        pytest.skip("infeasible instance")
    sched = extract_schedule(sol, idx, case)
    net = case.network
    for t in range(sched.T):
        inj = -sched.load[:, t, 0].copy()
        for e, gid in enumerate(sched.gen_ids):
            inj[net.bus_position(case.generator(gid).bus)] += sched.g[e, t, 0]
        out = np.zeros(net.n_buses)
        for li, line in enumerate(net.lines):
            out[net.bus_position(line.from_bus)] += sched.flows[li, t, 0]
            out[net.bus_position(line.to_bus)] -= sched.flows[li, t, 0]
        np.testing.assert_allclose(inj, out, atol=1e-6)
    assert np.all(np.abs(energy_balance_residual(sched)) <= 1e-6)


def test_flat_schedule_has_no_dynamic_increment():
    case = coal_case()
    sched = solved(case)
    e = sched.gen_ids.index("C")
    sched.g[e, :, 0] = 25.0
    sched.u[sched.committable_ids.index("C"), :, 0] = 1.0
    em = emission_accounting(sched, case)
    np.testing.assert_allclose(em.dynamic_increment, 0.0, atol=1e-12)
    ps = case.coal_plant("C").static_params
    np.testing.assert_allclose(em.static[0, :, 0], static_hourly_emission(ps, 25.0), rtol=1e-14)


def test_single_swing_touches_three_hours():
    case = coal_case()
    sched = solved(case)
    e = sched.gen_ids.index("C")
    sched.g[e, :, 0] = 25.0
    sched.g[e, 5, 0] = 35.0
    sched.u[sched.committable_ids.index("C"), :, 0] = 1.0
    em = emission_accounting(sched, case)
    inc = em.dynamic_increment[0, :, 0]
    assert np.all(np.abs(inc[[4, 5, 6]]) > 1e-9)
    assert np.all(inc[[0, 1, 2, 3, 7]] == 0.0)
    plant = case.coal_plant("C")
    ref = dynamic_hourly_emission(plant.static_params, plant.dynamic_params, 25.0, 35.0, 25.0)
    assert em.hourly_total[0, 5, 0] == pytest.approx(ref, rel=1e-14)
    assert em.expected_total == pytest.approx(em.hourly_total.sum(), abs=1e-9)
    assert em.expected_total == pytest.approx(em.expected_static + em.expected_dynamic, abs=1e-9)


def test_tau_override_and_carbon_cost():
    case = coal_case()
    sched = solved(case)
    e = sched.gen_ids.index("C")
    sched.g[e, :, 0] = np.linspace(20, 55, 8)
    em_a = emission_accounting(sched, case, carbon_price=30.0)
    em_b = emission_accounting(sched, case, tau=0.5)
    assert em_a.carbon_cost == pytest.approx(30.0 * em_a.expected_total)
    assert em_b.expected_dynamic != pytest.approx(em_a.expected_dynamic)


def test_recompute_alpha_beta_example():
    a, b = recompute_alpha_beta(np.array([10.0, 10.0, 5.0]), 0.0)
    assert a.sum() == 10.0 and b.sum() == 5.0
    np.testing.assert_array_equal(a, [10.0, 0.0, 0.0])
    np.testing.assert_array_equal(b, [0.0, 0.0, 5.0])


def test_deep_cycle_metrics_sources():
    case = coal_case(T=4)
    z = deep_cycle_metrics(solved(case, "zeros"), case)
    h = deep_cycle_metrics(solved(case, "high"), case)
    assert z.source == "recomputed" and h.source == "solution"
    assert z.total_alpha_beta >= 0 and h.total_alpha_beta >= 0


def _runs(case, levels):
    out = []
    for lv in levels:
        s = solved(case, lv)
        out.append((lv, s, emission_accounting(s, case), deep_cycle_metrics(s, case)))
    return out


def test_compare_permutation_invariant_and_identical():
    case = one_bus([COAL, GAS], [30, 55, 40, 65], coal=[{"generator": "C", "eol": 30}])
    runs = _runs(case, ["zeros", "low", "high", "very_high"])
    t1 = compare_scenarios(runs, case)
    t2 = compare_scenarios(runs[::-1], case)
    assert [r.as_dict() for r in t1.rows] == [r.as_dict() for r in t2.rows]
    assert [r.label for r in t1.rows] == ["zeros", "low", "high", "very_high"]
    same = compare_scenarios([runs[0], runs[0]], case)
    assert same.rows[0].as_dict() == same.rows[1].as_dict()
    assert dispatch_l1_change(runs[0][1], runs[0][1], runs[0][1].gen_ids) == 0.0
    assert "label" in t1.to_text()


def test_compare_rejects_bad_input(tmp_path):
    a = _runs(coal_case(T=4), ["zeros"])[0]
    b = _runs(coal_case(T=3), ["low"])[0]
    with pytest.raises(ValueError, match="horizons"):
        compare_scenarios([a, b], coal_case(T=4))
    with pytest.raises(ValueError):
        compare_scenarios([a], coal_case(T=4))


def test_csv_outputs(tmp_path):
    case = coal_case(T=3)
    s = solved(case)
    paths = write_run_csvs(s, emission_accounting(s, case), tmp_path)
    names = {p.name for p in paths}
    assert {"dispatch.csv", "commitment.csv", "emissions.csv"} <= names
    lines = (tmp_path / "dispatch.csv").read_text().splitlines()
    assert len(lines) == 1 + 3
