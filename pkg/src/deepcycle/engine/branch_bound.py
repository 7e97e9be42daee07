"""LP-based branch-and-bound for binary/integer columns."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..problem import MilpProblem
from .lp import SolverOptions, make_simplex, solve_lp
from .cuts import gomory_cuts
from .simplex import BasisState, LpStatus


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray | None
    objective: float
    bound: float
    gap: float
    nodes: int = 0
    lp_iterations: int = 0
    solve_time: float = 0.0
    bound_history: list[float] = field(default_factory=list)
    incumbent_history: list[tuple[int, float]] = field(default_factory=list)
    solver: str = "deepcycle-bnb"
    message: str = ""

    @property
    def has_solution(self) -> bool:
        return self.x is not None

    def summary(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "bound": self.bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "lp_iterations": self.lp_iterations,
            "solve_time_s": self.solve_time,
            "solver": self.solver,
            "message": self.message,
        }


def relative_gap(objective: float, bound: float) -> float:
    if not np.isfinite(objective):
        return np.inf
    if not np.isfinite(bound):
        return np.inf
    return max(0.0, (objective - bound) / max(1.0, abs(objective)))


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    bound: float
    depth: int
    state: BasisState | None
    parent: int
    var: int = -1  # branching position in ``ints`` that created this node
    up: bool = False
    dist: float = 0.0


def _integral_bounds(problem: MilpProblem, ints: np.ndarray, tol: float):
    lo = problem.col_lo.copy()
    hi = problem.col_hi.copy()
    lo[ints] = np.ceil(lo[ints] - tol)
    hi[ints] = np.floor(hi[ints] + tol)
    return lo, hi


def solve_milp(problem: MilpProblem, options: SolverOptions | None = None, start=None) -> MilpSolution:
    """Best-bound branch-and-bound with depth-first plunging to the first incumbent.

    Branches on the most fractional integer column (lowest index on ties).
    Child nodes start from the parent's optimal basis and are reoptimized by
    the dual simplex.  Deterministic for fixed options unless a time limit
    interrupts the search.

    ``start`` is an optional integer-feasible point; its integer part is
    re-polished and, if feasible, becomes the first incumbent.

    With ``options.heuristics`` the root runs a sub-MIP over the columns the
    relaxation leaves fractional, and every ``rins_interval`` nodes a sub-MIP
    over the columns where the node relaxation and the incumbent disagree.
    """
    opts = options or SolverOptions()
    t0 = time.perf_counter()
    ints = np.flatnonzero(problem.integer)
    lo, hi = _integral_bounds(problem, ints, opts.int_tol)
    if np.any(lo > hi):
        return MilpSolution("infeasible", None, np.inf, np.inf, np.inf, message="empty integer domain")
    if ints.size == 0:
        lps = solve_lp(problem, opts)
        return _from_lp(lps, time.perf_counter() - t0)

    lp = make_simplex(problem.with_bounds(col_lo=lo, col_hi=hi), opts)
    n = problem.n_cols
    abs_tol = 1e-9

    def cutoff_of(inc: float) -> float:
        if not np.isfinite(inc):
            return np.inf
        # shade the gap slightly so rounding cannot report a final gap above mip_gap
        return inc - max(opts.mip_gap * (1.0 - 1e-9) * max(1.0, abs(inc)), abs_tol * max(1.0, abs(inc)))

    counter = itertools.count()
    heap: list[tuple[float, int, _Node]] = []
    root = _Node(lo[ints].copy(), hi[ints].copy(), -np.inf, 0, None, -1)
    inc_x: np.ndarray | None = None
    inc_obj = np.inf
    pruned_bound = np.inf
    bound_history: list[float] = []
    inc_history: list[tuple[int, float]] = []
    if start is not None:
        xs = np.asarray(start, dtype=float)
        if xs.shape == (n,) and np.all(np.abs(xs[ints] - np.round(xs[ints])) <= opts.int_tol):
            cand = _polish(problem, lp, ints, np.round(xs[ints]), n)
            lp.set_col_bounds(ints, lo[ints], hi[ints])
            lp._slack_start()
            if cand is not None:
                inc_x, inc_obj = cand
                inc_history.append((0, inc_obj))
    nodes = 0
    last_solved = None
    numerical = 0
    stop_reason = ""
    n_cuts, root_lp_bound = _root_cuts(problem, lp, opts)
    pcost = _Pseudocosts(ints.size)

    # depth-first stack used until the first incumbent (or throughout for depth_first)
    stack: list[tuple[int, _Node]] = [(next(counter), root)]
    root_bound = -np.inf
    last_rins = 0
    n_heur = 0

    def try_sub(fix_mask, values, node_limit):
        nonlocal inc_x, inc_obj, n_heur
        cand = _sub_mip(problem, ints, fix_mask, values, opts, t0, inc_x, node_limit)
        if cand is not None and cand[1] < inc_obj - abs_tol * max(1.0, abs(cand[1])):
            inc_x, inc_obj = cand
            inc_history.append((nodes, inc_obj))
            n_heur += 1

    def global_bound(current: float) -> float:
        b = min(current, pruned_bound, inc_obj)
        if heap:
            b = min(b, heap[0][0])
        for _, nd in stack:
            b = min(b, nd.bound)
        return b

    def diving() -> bool:
        return opts.node_selection == "depth_first" or (
            opts.node_selection == "best_bound_plunge" and inc_x is None
        )

    while True:
        if stack and not diving():
            for nid, nd in stack:
                heapq.heappush(heap, (nd.bound, nid, nd))
            stack.clear()
        if stack:
            node_id, node = stack.pop()
        elif heap:
            _, node_id, node = heapq.heappop(heap)
        else:
            break

        cutoff = cutoff_of(inc_obj)
        if node.bound >= cutoff:
            pruned_bound = min(pruned_bound, node.bound)
            bound_history.append(global_bound(np.inf))
            continue
        if opts.node_limit is not None and nodes >= opts.node_limit:
            stack.append((node_id, node))
            stop_reason = "node_limit"
            break
        if opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit:
            stack.append((node_id, node))
            stop_reason = "time_limit"
            break

        lp.set_col_bounds(ints, node.lo, node.hi)
        if node.state is None:
            if node.depth == 0:
                pass
            else:
                lp._slack_start()
        elif last_solved != node.parent:
            lp.set_state(node.state)
        status = lp.solve(cutoff=cutoff if np.isfinite(cutoff) else None)
        if status in (LpStatus.NUMERICAL, LpStatus.ITERATION_LIMIT):
            lp._slack_start()
            status = lp.solve(cutoff=cutoff if np.isfinite(cutoff) else None)
        nodes += 1
        last_solved = node_id
        if node.var >= 0 and status == LpStatus.OPTIMAL:
            pcost.record(node, lp.objective + problem.objective_offset)

        if status == LpStatus.UNBOUNDED:
            if node.depth == 0:
                return MilpSolution("unbounded", None, -np.inf, -np.inf, np.inf, nodes,
                                    lp.iterations, time.perf_counter() - t0, message="LP relaxation unbounded")
            numerical += 1
            bound_history.append(global_bound(np.inf))
            continue
        if status in (LpStatus.NUMERICAL, LpStatus.ITERATION_LIMIT):
            numerical += 1
            pruned_bound = min(pruned_bound, node.bound)
            bound_history.append(global_bound(np.inf))
            continue
        if status in (LpStatus.INFEASIBLE, LpStatus.CUTOFF):
            if status == LpStatus.CUTOFF:
                pruned_bound = min(pruned_bound, max(node.bound, cutoff))
            bound_history.append(global_bound(np.inf))
            continue

        lp.finalize()
        z = lp.objective + problem.objective_offset
        if node.depth == 0:
            root_bound = z
        x = lp.x[:n].copy()
        xi = x[ints]
        if opts.heuristics:
            integral = np.abs(xi - np.round(xi)) <= opts.int_tol
            if node.depth == 0 and inc_x is None and not integral.all():
                try_sub(integral, np.round(xi), 2000)
            elif inc_x is not None and nodes - last_rins >= opts.rins_interval:
                last_rins = nodes
                try_sub(integral & (np.abs(xi - inc_x[ints]) <= opts.int_tol), np.round(xi), 1000)
            cutoff = cutoff_of(inc_obj)
        if z >= cutoff:
            pruned_bound = min(pruned_bound, z)
            bound_history.append(global_bound(np.inf))
            continue
        frac = np.abs(xi - np.round(xi))
        if np.all(frac <= opts.int_tol):
            state = lp.get_state()
            cand = _polish(problem, lp, ints, np.round(xi), n)
            lp.set_col_bounds(ints, node.lo, node.hi)
            lp.set_state(state)
            last_solved = None
            if cand is not None and cand[1] < inc_obj:
                inc_x, inc_obj = cand
                inc_history.append((nodes, inc_obj))
            bound_history.append(global_bound(np.inf))
            continue

        child_lo, child_hi = node.lo.copy(), node.hi.copy()
        if opts.reduced_cost_fixing and np.isfinite(inc_obj):
            _reduced_cost_fix(lp, ints, child_lo, child_hi, inc_obj - z)
        f = xi - np.floor(xi)
        if opts.branching == "pseudocost":
            score = pcost.score(f)
        else:
            score = np.minimum(f, 1.0 - f)
        score[frac <= opts.int_tol] = -1.0
        b = int(np.argmax(score))
        state = lp.get_state()
        down = _Node(child_lo.copy(), child_hi.copy(), z, node.depth + 1, state, node_id, b, False, f[b])
        down.hi[b] = math.floor(xi[b])
        up = _Node(child_lo.copy(), child_hi.copy(), z, node.depth + 1, state, node_id, b, True, 1.0 - f[b])
        up.lo[b] = math.ceil(xi[b])
        first, second = (up, down) if f[b] >= 0.5 else (down, up)

        if diving():
            stack.append((next(counter), second))
            stack.append((next(counter), first))
        else:
            heapq.heappush(heap, (first.bound, next(counter), first))
            heapq.heappush(heap, (second.bound, next(counter), second))
        bound_history.append(global_bound(z))

    elapsed = time.perf_counter() - t0
    bound = global_bound(np.inf)
    if not np.isfinite(bound) and inc_x is None and not stop_reason:
        bound = np.inf
    gap = relative_gap(inc_obj, bound) if inc_x is not None else np.inf
    if stop_reason:
        status = "feasible" if inc_x is not None else stop_reason
    elif inc_x is None:
        status = "infeasible"
    elif numerical:
        status = "feasible"
    else:
        status = "optimal" if gap <= max(opts.mip_gap, abs_tol) else "feasible"
    msg = stop_reason
    if numerical:
        msg = (msg + "; " if msg else "") + f"{numerical} node LPs failed numerically"
    return MilpSolution(
        status=status,
        x=inc_x,
        objective=inc_obj,
        bound=bound if inc_x is not None or stop_reason else np.inf,
        gap=gap,
        nodes=nodes,
        lp_iterations=lp.iterations,
        solve_time=elapsed,
        bound_history=bound_history,
        incumbent_history=inc_history,
        message=msg or (f"root bound {root_bound:.6g} ({n_cuts} cuts, LP {root_lp_bound:.6g}), "
                        f"{n_heur} heuristic incumbents"),
    )


class _Pseudocosts:
    """Per-unit objective gains observed when branching down/up on each column."""

    def __init__(self, k: int):
        self.sum = np.zeros((2, k))
        self.cnt = np.zeros((2, k))

    def record(self, node: _Node, z: float) -> None:
        if node.dist <= 0 or not np.isfinite(node.bound):
            return
        d = int(node.up)
        self.sum[d, node.var] += max(z - node.bound, 0.0) / node.dist
        self.cnt[d, node.var] += 1

    def score(self, f: np.ndarray) -> np.ndarray:
        tot = self.cnt.sum(axis=1)
        mean = np.where(tot > 0, self.sum.sum(axis=1) / np.maximum(tot, 1), 1.0)
        avg = np.where(self.cnt > 0, self.sum / np.maximum(self.cnt, 1), mean[:, None])
        down = f * avg[0]
        up = (1.0 - f) * avg[1]
        eps = 1e-6
        return np.maximum(down, eps) * np.maximum(up, eps)


def _root_cuts(problem, lp, opts, min_gain: float = 1e-6, stall_rounds: int = 3):
    """Rounds of Gomory cuts on the root relaxation, added to ``lp`` in place.

    Stops after ``opts.cut_rounds`` rounds, when no cut separates, or after
    ``stall_rounds`` rounds without relative bound progress ``min_gain``.
    """
    first = None
    if opts.cut_rounds == 0:
        return 0, np.nan
    total = 0
    last = -np.inf
    stall = 0
    for _ in range(opts.cut_rounds):
        if lp.solve() != LpStatus.OPTIMAL:
            break
        lp.finalize()
        z = lp.objective
        if first is None:
            first = z + problem.objective_offset
        if z - last <= min_gain * max(1.0, abs(z)):
            stall += 1
            if stall >= stall_rounds:
                break
        else:
            stall = 0
        last = z
        cuts = gomory_cuts(lp, problem.integer, max_cuts=opts.cuts_per_round, away=1e-3, min_efficacy=1e-6)
        if not cuts:
            break
        R = np.array([c for c, _ in cuts])
        lp.add_rows(R, np.array([r for _, r in cuts]), np.full(len(cuts), np.inf))
        total += len(cuts)
    return total, (np.nan if first is None else first)


def _sub_mip(problem, ints, fix_mask, values, opts, t0, inc_x, node_limit, max_time=60.0):
    """Solve the MILP with ``ints[fix_mask]`` fixed; returns (x, objective) or None."""
    if fix_mask.sum() < 0.3 * ints.size or fix_mask.all():
        return None
    budget = max_time
    if opts.time_limit is not None:
        budget = min(budget, opts.time_limit - (time.perf_counter() - t0))
    if budget < 1.0:
        return None
    cols = ints[fix_mask]
    lo, hi = problem.col_lo.copy(), problem.col_hi.copy()
    lo[cols] = values[fix_mask]
    hi[cols] = values[fix_mask]
    sub_opts = replace(opts, heuristics=False, node_limit=node_limit, time_limit=budget,
                       cut_rounds=min(opts.cut_rounds, 10))
    res = solve_milp(problem.with_bounds(col_lo=lo, col_hi=hi), sub_opts, start=inc_x)
    if res.x is None:
        return None
    return res.x, res.objective


def _polish(problem, lp, ints, values, n):
    """Fix integers at their rounded values and reoptimize the continuous part."""
    lp.set_col_bounds(ints, values, values)
    status = lp.solve()
    if status != LpStatus.OPTIMAL:
        lp._slack_start()
        status = lp.solve()
    if status != LpStatus.OPTIMAL:
        return None
    lp.finalize()
    x = lp.x[:n].copy()
    x[ints] = values
    return x, problem.objective(x)


def _reduced_cost_fix(lp, ints, lo, hi, gap_abs):
    d = lp.reduced_costs()[ints]
    st = lp.status[ints]
    at_lo = (st == 1) & (d > gap_abs + 1e-9)
    at_hi = (st == 2) & (-d > gap_abs + 1e-9)
    hi[at_lo] = lo[at_lo]
    lo[at_hi] = hi[at_hi]


def _from_lp(lps, elapsed) -> MilpSolution:
    st = lps.status.value
    if st == "optimal":
        return MilpSolution("optimal", lps.x, lps.objective, lps.objective, 0.0, 1,
                            lps.iterations, elapsed, [lps.objective], [(1, lps.objective)])
    mapping = {"infeasible": "infeasible", "unbounded": "unbounded"}
    return MilpSolution(mapping.get(st, st), None, np.inf, -np.inf, np.inf, 1, lps.iterations, elapsed,
                        message=f"LP status {st}")
