"""Exhaustive enumeration over binary assignments (test oracle)."""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from ..problem import MilpProblem
from .branch_bound import MilpSolution, _from_lp
from .lp import SolverOptions, make_simplex, solve_lp
from .simplex import LpStatus


class TooManyBinaries(ValueError):
    pass


def brute_force_uc(
    problem: MilpProblem,
    max_binaries: int = 20,
    options: SolverOptions | None = None,
    chunk: int = 4096,
    head_size: int = 8,
) -> MilpSolution:
    """Exact optimum by enumerating every 0/1 assignment of the integer columns.

    Each assignment is screened by interval arithmetic on the rows (a row
    whose attainable activity range misses its bounds is infeasible for any
    continuous completion).  The leading ``head_size`` binaries are then fixed
    head by head; a head whose LP relaxation over the remaining binaries
    cannot beat the incumbent is skipped.  Within a head, tails are visited
    in increasing order of their own cost and the scan stops once that cost
    plus a lower bound on everything else reaches the incumbent.  None of
    these steps discards a possibly better assignment, so the result stays
    exact.
    """
    opts = options or SolverOptions()
    t0 = time.perf_counter()
    ints = np.flatnonzero(problem.integer)
    if ints.size > max_binaries:
        raise TooManyBinaries(f"{ints.size} binary columns exceed the limit of {max_binaries}")
    if ints.size == 0:
        return _from_lp(solve_lp(problem, opts), time.perf_counter() - t0)
    if np.any(problem.col_lo[ints] < -opts.int_tol) or np.any(problem.col_hi[ints] > 1 + opts.int_tol):
        raise ValueError("brute_force_uc handles binary columns only")

    k = ints.size
    cont = np.setdiff1d(np.arange(problem.n_cols), ints)
    A = problem.A.tocsc()
    Ab = A[:, ints].toarray()
    Ac = A[:, cont]
    clo, chi = problem.col_lo[cont], problem.col_hi[cont]
    pos = Ac.multiply(Ac > 0).tocsr()
    neg = Ac.multiply(Ac < 0).tocsr()
    with np.errstate(invalid="ignore"):
        amin = _safe_dot(pos, clo) + _safe_dot(neg, chi)
        amax = _safe_dot(pos, chi) + _safe_dot(neg, clo)
    tol = 1e-7 * (1.0 + np.abs(problem.row_lo).clip(max=1e12) + np.abs(problem.row_hi).clip(max=1e12))
    fixed_lo = np.ceil(problem.col_lo[ints] - opts.int_tol)
    fixed_hi = np.floor(problem.col_hi[ints] + opts.int_tol)

    weights = 1 << np.arange(k)[::-1]
    total = 1 << k
    keep = []
    screened = 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        Z = ((codes[:, None] & weights[None, :]) > 0).astype(float)
        ok = np.all((Z >= fixed_lo) & (Z <= fixed_hi), axis=1)
        act = Z @ Ab.T
        ok &= np.all(act + amin <= problem.row_hi + tol, axis=1)
        ok &= np.all(act + amax >= problem.row_lo - tol, axis=1)
        screened += int((~ok).sum())
        keep.append(codes[ok])
    codes = np.concatenate(keep)

    # two levels: the leading binaries form a head; each head gets its LP
    # relaxation over the tail as a bound before its tails are enumerated
    kh = min(k, head_size)
    kt = k - kh
    head_cols, tail_cols = ints[:kh], ints[kh:]
    tail_w = weights[kh:] if kt else weights[:0]
    head_w = weights[:kh] >> kt
    heads = codes >> kt
    tails = codes & ((1 << kt) - 1)
    c_tail = problem.c[tail_cols]
    c_rest = problem.c.copy()
    c_rest[tail_cols] = 0.0

    lp = make_simplex(problem, opts)
    lp_rest = make_simplex(replace(problem, c=c_rest), opts)
    offset = problem.objective_offset
    solved = pruned = 0

    def run(sx, zh, zt=None):
        nonlocal solved
        sx.set_col_bounds(head_cols, zh, zh)
        if zt is None:
            sx.set_col_bounds(tail_cols, fixed_lo[kh:], fixed_hi[kh:])
        else:
            sx.set_col_bounds(tail_cols, zt, zt)
        status = sx.solve()
        if status in (LpStatus.NUMERICAL, LpStatus.ITERATION_LIMIT):
            sx._slack_start()
            status = sx.solve()
        solved += 1
        if status == LpStatus.OPTIMAL:
            sx.finalize()
        return status

    groups = []
    for hcode in np.unique(heads):
        zh = ((hcode & head_w) > 0).astype(float)
        status = run(lp, zh)
        if status == LpStatus.UNBOUNDED:
            return MilpSolution("unbounded", None, -np.inf, -np.inf, np.inf, solved,
                                lp.iterations, time.perf_counter() - t0, solver="brute-force")
        if status == LpStatus.OPTIMAL:
            groups.append((lp.objective, int(hcode), zh))
    groups.sort(key=lambda g: g[0])

    best_x, best_obj = None, np.inf
    for lb, hcode, zh in groups:
        if lb - _margin(lb) + offset >= best_obj:
            pruned += 1
            continue
        mine = tails[heads == hcode]
        Zt = ((mine[:, None] & tail_w[None, :]) > 0).astype(float)
        keys = Zt @ c_tail
        order = np.argsort(keys, kind="stable")
        # obj >= c_tail z_tail + L, with L the head LP without tail costs
        status = run(lp_rest, zh)
        floor = lp_rest.objective - _margin(lp_rest.objective) if status == LpStatus.OPTIMAL else -np.inf
        for i in order:
            if keys[i] + floor + offset >= best_obj:
                pruned += 1
                break
            zt = Zt[i]
            status = run(lp, zh, zt)
            if status != LpStatus.OPTIMAL:
                continue
            obj = lp.objective + offset
            if obj < best_obj - 1e-12 * max(1.0, abs(obj)):
                best_obj = obj
                best_x = lp.x[: problem.n_cols].copy()
                best_x[head_cols] = zh
                best_x[tail_cols] = zt
    elapsed = time.perf_counter() - t0
    msg = f"{total} assignments, {screened} screened out, {len(groups)} heads, {pruned} pruned, {solved} LPs"
    if best_x is None:
        return MilpSolution("infeasible", None, np.inf, np.inf, np.inf, solved, lp.iterations, elapsed,
                            solver="brute-force", message=msg)
    return MilpSolution("optimal", best_x, problem.objective(best_x), best_obj, 0.0, solved,
                        lp.iterations, elapsed, solver="brute-force", message=msg)


def _margin(v):
    return 1e-7 * max(1.0, abs(v)) if np.isfinite(v) else 0.0


def _safe_dot(M, v):
    """Row sums of M*v treating 0*inf as 0."""
    M = M.tocsr()
    out = np.zeros(M.shape[0])
    for i in range(M.shape[0]):
        p0, p1 = M.indptr[i], M.indptr[i + 1]
        if p1 > p0:
            out[i] = np.sum(M.data[p0:p1] * v[M.indices[p0:p1]])
    return out
