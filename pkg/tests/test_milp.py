import numpy as np
import pytest

from deepcycle.engine import SolverOptions, TooManyBinaries, brute_force_uc, solve_lp, solve_milp
from deepcycle.engine.cuts import gomory_cuts
from deepcycle.engine.lp import make_simplex
from deepcycle.engine.simplex import LpStatus
from deepcycle.formulation import assemble, check_solution
from deepcycle.grid import case_from_dict
from deepcycle.problem import make_problem
from conftest import tiny_problem
from oracles import tiny_uc_doc


def knapsack(seed, n=12):
    rng = np.random.default_rng(seed)
    w = rng.integers(3, 20, n).astype(float)
    v = rng.integers(1, 30, n).astype(float)
    cap = float(w.sum() / 2.5)
    extra = rng.uniform(0.5, 2.0)
    # one continuous column soaking up leftover capacity at a small value
    A = np.array([np.append(w, 1.0)])
    return make_problem(np.append(-v, -extra), A, [-np.inf], [cap],
                        col_lo=np.zeros(n + 1), col_hi=np.append(np.ones(n), 5.0),
                        integer=np.append(np.ones(n, dtype=bool), False))


def test_two_generator_three_slice_enumeration():
    doc = {
        "name": "two_gen", "horizon": 3,
        "network": {"buses": [{"id": 1, "reference": True}], "lines": []},
        "generators": [
            {"id": "A", "bus": 1, "kind": "gas", "g_min": 10, "g_max": 60, "offer_blocks": [[60, 20]],
             "no_load_cost": 40, "startup_cost": 100, "initial_commitment": False},
            {"id": "B", "bus": 1, "kind": "gas", "g_min": 5, "g_max": 40, "offer_blocks": [[40, 30]],
             "no_load_cost": 10, "startup_cost": 20, "initial_commitment": False},
        ],
        "profiles": {"load": [[30], [70], [20]]},
    }
    p, idx = assemble(case_from_dict(doc))
    sol = solve_milp(p)
    # independent enumeration over the 2^6 commitment patterns with dispatch solved per pattern
    best = np.inf
    for code in range(64):
        u = np.array([(code >> i) & 1 for i in range(6)], dtype=float).reshape(2, 3)
        lo, hi = p.col_lo.copy(), p.col_hi.copy()
        for gi, gid in enumerate(("A", "B")):
            for t in range(3):
                j = idx.col("u", gid, t)
                lo[j] = hi[j] = u[gi, t]
        relaxed = p.with_bounds(col_lo=lo, col_hi=hi, integer=np.zeros(p.n_cols, dtype=bool))
        r = solve_lp(relaxed)
        if r.status == LpStatus.OPTIMAL:
            best = min(best, r.objective)
    assert sol.objective == pytest.approx(best, abs=1e-6)


@pytest.mark.parametrize("seed", range(12))
def test_sandwich_against_brute_force(seed):
    _, p, _ = tiny_problem(seed)
    bf = brute_force_uc(p)
    sol = solve_milp(p)
    assert bf.status == sol.status
    if sol.status == "optimal":
        assert bf.objective <= sol.objective + 1e-6
        assert bf.objective >= sol.bound - 1e-6
        assert check_solution(p, sol.x).ok


@pytest.mark.parametrize("seed", range(6))
def test_knapsack_matches_brute_force(seed):
    p = knapsack(seed)
    assert solve_milp(p).objective == pytest.approx(brute_force_uc(p).objective, abs=1e-6)


@pytest.mark.parametrize(
    "opts",
    [
        SolverOptions(cut_rounds=0),
        SolverOptions(heuristics=False),
        SolverOptions(branching="most_fractional"),
        SolverOptions(node_selection="depth_first", cut_rounds=0),
        SolverOptions(node_selection="best_bound"),
    ],
)
def test_option_variants_agree(opts):
    for seed in (0, 4, 9):
        _, p, _ = tiny_problem(seed)
        ref = brute_force_uc(p)
        sol = solve_milp(p, opts)
        assert sol.status == ref.status
        if ref.status == "optimal":
            assert sol.objective == pytest.approx(ref.objective, abs=1e-6)


def test_deterministic_repeat():
    _, p, _ = tiny_problem(4)
    a = solve_milp(p)
    b = solve_milp(p)
    assert a.objective == b.objective
    assert a.nodes == b.nodes
    assert np.array_equal(a.x, b.x)


def test_bound_history_monotone_and_incumbents_valid():
    for seed in (0, 4, 12):
        _, p, _ = tiny_problem(seed)
        sol = solve_milp(p, SolverOptions(cut_rounds=0))
        hist = np.array([b for b in sol.bound_history if np.isfinite(b)])
        assert np.all(np.diff(hist) >= -1e-9)
        assert sol.gap >= 0
        ints = np.flatnonzero(p.integer)
        assert np.max(np.abs(sol.x[ints] - np.round(sol.x[ints]))) <= 1e-6
        objs = [o for _, o in sol.incumbent_history]
        assert all(b <= a for a, b in zip(objs, objs[1:]))


def test_all_binaries_fixed_reduces_to_lp():
    _, p, _ = tiny_problem(0)
    ref = brute_force_uc(p)
    ints = np.flatnonzero(p.integer)
    lo, hi = p.col_lo.copy(), p.col_hi.copy()
    lo[ints] = hi[ints] = np.round(ref.x[ints])
    fixed = p.with_bounds(col_lo=lo, col_hi=hi)
    lp = solve_lp(fixed.with_bounds(integer=np.zeros(p.n_cols, dtype=bool)))
    assert solve_milp(fixed).objective == pytest.approx(lp.objective, abs=1e-9)


def test_zero_binaries_identical_to_lp():
    p = make_problem([1.0, 2.0], [[1.0, 1.0]], [3.0], [np.inf])
    bf = brute_force_uc(p)
    lp = solve_lp(p)
    assert bf.objective == lp.objective
    assert np.array_equal(bf.x, lp.x)


def test_every_assignment_infeasible():
    # x0 + x1 = 1.5 has no 0/1 solution
    p = make_problem([1.0, 1.0], [[1.0, 1.0]], [1.5], [1.5], col_hi=[1, 1], integer=[True, True])
    assert brute_force_uc(p).status == "infeasible"
    assert solve_milp(p).status == "infeasible"


def test_too_many_binaries():
    n = 21
    p = make_problem(np.ones(n), np.ones((1, n)), [1.0], [np.inf], col_hi=np.ones(n), integer=np.ones(n, bool))
    with pytest.raises(TooManyBinaries):
        brute_force_uc(p)


def test_node_limit_status():
    p = knapsack(3, n=20)
    sol = solve_milp(p, SolverOptions(node_limit=1, cut_rounds=0, heuristics=False))
    assert sol.status in ("node_limit", "feasible", "optimal")
    if sol.status == "feasible":
        assert sol.gap >= 0


def test_start_point_becomes_incumbent():
    _, p, _ = tiny_problem(9)
    ref = brute_force_uc(p)
    sol = solve_milp(p, SolverOptions(node_limit=0), start=ref.x)
    assert sol.x is not None
    assert sol.objective == pytest.approx(ref.objective, abs=1e-6)


def _cut_rounds_hold(p, x_opt, rounds=5):
    lp = make_simplex(p, SolverOptions())
    for _ in range(rounds):
        if lp.solve() != LpStatus.OPTIMAL:
            break
        lp.finalize()
        cuts = gomory_cuts(lp, p.integer, max_cuts=50, away=1e-3, min_efficacy=1e-6)
        if not cuts:
            break
        for coef, rhs in cuts:
            assert coef @ x_opt >= rhs - 1e-6 * max(1.0, abs(rhs))
            # each cut separates the current relaxation point
            assert coef @ lp.x[: p.n_cols] < rhs
        lp.add_rows(np.array([c for c, _ in cuts]), np.array([r for _, r in cuts]), np.full(len(cuts), np.inf))


@pytest.mark.parametrize("seed", [0, 4, 7, 12, 15, 22])
def test_gomory_cuts_valid_on_tiny_uc(seed):
    _, p, _ = tiny_problem(seed)
    ref = brute_force_uc(p)
    if ref.status != "optimal":
        pytest.skip("infeasible instance")
    _cut_rounds_hold(p, ref.x)


@pytest.mark.parametrize("seed", range(5))
def test_gomory_cuts_valid_on_knapsack(seed):
    p = knapsack(seed)
    # every integer-feasible point must satisfy the cuts, not only the optimum
    ref = brute_force_uc(p)
    _cut_rounds_hold(p, ref.x)


def test_tiny_generator_respects_limits():
    for seed in range(25):
        doc = tiny_uc_doc(np.random.default_rng(seed))
        p, _ = assemble(case_from_dict(doc))
        assert p.integer.sum() <= 20
        assert doc["horizon"] <= 4
        assert len(doc["generators"]) <= 3
        assert len(doc["coal_plants"]) == 1
