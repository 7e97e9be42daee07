"""Gomory mixed-integer cuts read from an optimal simplex tableau.

Each cut is returned as ``(coef, rhs)`` meaning ``coef @ x >= rhs`` over the
structural columns.  Cuts derived at the root with the original bounds are
valid for the whole search tree.
"""

from __future__ import annotations

import numpy as np

from .simplex import AT_LOWER, AT_UPPER, AT_ZERO, BASIC, BoundedSimplex

_EPS = 1e-9
_MAX_DYNAMISM = 1e6


def _relax_small(coef, rhs, lo, hi, tiny):
    """Drop near-zero coefficients, moving their worst case into the rhs."""
    small = (coef != 0.0) & (np.abs(coef) < tiny)
    if not small.any():
        return coef, rhs
    bnd = np.where(coef[small] > 0, hi[small], lo[small])
    if not np.all(np.isfinite(bnd)):
        return None, None
    rhs -= float(coef[small] @ bnd)
    coef = coef.copy()
    coef[small] = 0.0
    return coef, rhs


def gomory_cuts(lp: BoundedSimplex, integer: np.ndarray, max_cuts: int = 50,
                away: float = 0.01, min_efficacy: float = 1e-4):
    """Separate GMI cuts from basic integer columns with fractional values.

    ``lp`` must hold an optimal, freshly factorized basis.  Logical columns
    (including those of earlier cuts) are eliminated through their rows.
    """
    n, m = lp.n, lp.m
    x = lp.x
    lo, hi = lp.lo, lp.hi
    st = lp.status
    cands = []
    for r, j in enumerate(lp.basis):
        if j < n and integer[j]:
            f0 = x[j] - np.floor(x[j])
            if away <= f0 <= 1.0 - away:
                cands.append((-min(f0, 1.0 - f0), int(j), r, f0))
    cands.sort()
    nonbasic = (st != BASIC) & (lo < hi)
    at_up = st == AT_UPPER
    is_int = np.zeros(n + m, dtype=bool)
    is_int[:n] = integer
    cuts = []
    xs = x[:n]
    AT = lp.AfT[:n]
    for _, j, r, f0 in cands[: 4 * max_cuts]:
        e = np.zeros(m)
        e[r] = 1.0
        rho = lp._lu.btran(e)
        alpha = lp.AfT @ rho
        # row in the form x_i + sum(a_j t_j) = x_i*
        a = np.where(at_up, -alpha, alpha)
        a[~nonbasic] = 0.0
        a[np.abs(a) < 1e-12] = 0.0
        if np.any((st == AT_ZERO) & (a != 0.0)):
            continue
        fj = a - np.floor(a)
        pi = np.where(
            is_int,
            np.where(fj <= f0, fj / f0, (1.0 - fj) / (1.0 - f0)),
            np.where(a >= 0.0, a / f0, -a / (1.0 - f0)),
        )
        pi[a == 0.0] = 0.0
        # back to variable space: t_j = x_j - lo_j (lower) or hi_j - x_j (upper)
        sign = np.where(at_up, -1.0, 1.0)
        c_full = pi * sign
        bound = np.where(at_up, hi, lo)
        used = pi != 0.0
        if not np.all(np.isfinite(bound[used])):
            continue
        rhs = 1.0 + float(c_full[used] @ bound[used])
        coef = c_full[:n].copy()
        c_log = c_full[n:]
        if np.any(c_log):
            coef += AT @ c_log
        scale = np.max(np.abs(coef)) if coef.size else 0.0
        if scale <= _EPS:
            continue
        coef /= scale
        rhs /= scale
        coef, rhs = _relax_small(coef, rhs, lo[:n], hi[:n], 1e-9)
        if coef is None:
            continue
        nz = np.abs(coef[coef != 0.0])
        if nz.size == 0 or nz.max() / nz.min() > _MAX_DYNAMISM:
            continue
        viol = rhs - float(coef @ xs)
        eff = viol / float(np.linalg.norm(coef))
        if eff < min_efficacy:
            continue
        cuts.append((eff, coef, rhs))
    cuts.sort(key=lambda c: -c[0])
    chosen = []
    for eff, coef, rhs in cuts:
        unit = coef / np.linalg.norm(coef)
        if any(abs(float(unit @ u)) > 0.99 for _, _, u in chosen):
            continue
        chosen.append((coef, rhs, unit))
        if len(chosen) >= max_cuts:
            break
    return [(c, r) for c, r, _ in chosen]
