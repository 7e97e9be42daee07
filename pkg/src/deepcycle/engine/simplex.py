"""Bounded-variable revised simplex.

The LP is held in computational form

    [A  -I] [x; r] = 0,   lo <= (x, r) <= hi

so every row owns a logical column ``r`` whose bounds are the row range.
The basis is kept as a sparse LU (SuperLU) plus a product-form eta file
that is discarded on every refactorization.

Two drivers share the basis machinery:

* ``primal`` -- Dantzig pricing, composite phase 1 (sum of infeasibilities,
  first-breakpoint ratio test), Bland's rule after a run of degenerate pivots.
* ``dual`` -- dual steepest-edge pricing, bound-flipping ratio test with a
  Harris pass.  Used from dual-feasible starts and for branch-and-bound
  reoptimization after bound changes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

BASIC, AT_LOWER, AT_UPPER, AT_ZERO = 0, 1, 2, 3

_PIVOT_TOL = 1e-9
_DEGENERATE_RUN = 60


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    CUTOFF = "cutoff"
    NUMERICAL = "numerical_failure"


class SingularBasis(RuntimeError):
    pass


class _LU:
    """Sparse LU of the basis with product-form eta updates."""

    def __init__(self, B: sp.csc_matrix):
        try:
            self.lu = spla.splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:  # exactly singular
            raise SingularBasis(str(exc)) from exc
        self.etas: list[tuple[int, np.ndarray, np.ndarray, float]] = []

    def ftran(self, rhs: np.ndarray) -> np.ndarray:
        v = self.lu.solve(rhs)
        for r, idx, vals, piv in self.etas:
            vr = v[r] / piv
            if vr != 0.0:
                v[idx] -= vals * vr
            v[r] = vr
        return v

    def btran(self, rhs: np.ndarray) -> np.ndarray:
        z = np.array(rhs, dtype=float)
        for r, idx, vals, piv in reversed(self.etas):
            z[r] = (z[r] - vals @ z[idx]) / piv
        return self.lu.solve(z, trans="T")

    def update(self, r: int, w: np.ndarray) -> None:
        idx = np.flatnonzero(w)
        idx = idx[idx != r]
        self.etas.append((r, idx, w[idx].copy(), float(w[r])))


@dataclass
class BasisState:
    basis: np.ndarray
    status: np.ndarray
    weights: np.ndarray


class BoundedSimplex:
    """Revised simplex over ``row_lo <= A x <= row_hi``, ``col_lo <= x <= col_hi``.

    Bounds may be changed between solves (``set_col_bounds``); the current
    basis is then reoptimized, by the dual simplex when it is still dual
    feasible.
    """

    def __init__(
        self,
        A,
        row_lo,
        row_hi,
        c,
        col_lo,
        col_hi,
        *,
        primal_tol: float = 1e-7,
        dual_tol: float = 1e-7,
        max_iter: int | None = None,
        refactor_every: int = 80,
    ):
        A = sp.csc_matrix(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        self.Af = sp.hstack([A, -sp.identity(m, format="csc")], format="csc")
        self.Af.sort_indices()
        self.AfT = self.Af.T.tocsr()
        self._indptr = self.Af.indptr
        self._indices = self.Af.indices
        self._data = self.Af.data
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
        self.lo = np.concatenate([np.asarray(col_lo, dtype=float), np.asarray(row_lo, dtype=float)])
        self.hi = np.concatenate([np.asarray(col_hi, dtype=float), np.asarray(row_hi, dtype=float)])
        self.ptol = primal_tol
        self.dtol = dual_tol
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n) + 1000
        self.refactor_every = refactor_every
        self.iterations = 0
        self._slack_start()

    # -- basis bookkeeping -------------------------------------------------

    def _slack_start(self) -> None:
        m, n = self.m, self.n
        self.basis = np.arange(n, n + m)
        self.status = np.full(n + m, AT_LOWER, dtype=np.int8)
        self.status[self.basis] = BASIC
        self.weights = np.ones(m)
        for j in range(n):
            self.status[j] = self._default_status(j, self.c[j])
        self.x = np.zeros(n + m)
        self._lu = None

    def _default_status(self, j: int, dj: float) -> int:
        lo, hi = self.lo[j], self.hi[j]
        if np.isfinite(lo) and np.isfinite(hi):
            return AT_UPPER if dj < 0 and lo < hi else AT_LOWER
        if np.isfinite(lo):
            return AT_LOWER
        if np.isfinite(hi):
            return AT_UPPER
        return AT_ZERO

    def get_state(self) -> BasisState:
        return BasisState(self.basis.copy(), self.status.copy(), self.weights.copy())

    def set_state(self, state: BasisState) -> None:
        self.basis = state.basis.copy()
        self.status = state.status.copy()
        self.weights = state.weights.copy()
        self._lu = None

    def set_col_bounds(self, cols, lo, hi) -> None:
        cols = np.asarray(cols, dtype=int)
        self.lo[cols] = lo
        self.hi[cols] = hi

    def add_rows(self, R, row_lo, row_hi) -> None:
        """Append rows ``row_lo <= R x <= row_hi``; their logicals enter the basis."""
        R = sp.csc_matrix(R, dtype=float)
        k = R.shape[0]
        if k == 0:
            return
        m, n = self.m, self.n
        A = self.Af[:, :n]
        top = sp.hstack([A, -sp.identity(m, format="csc"), sp.csc_matrix((m, k))], format="csc")
        bot = sp.hstack([R, sp.csc_matrix((k, m)), -sp.identity(k, format="csc")], format="csc")
        self.Af = sp.vstack([top, bot], format="csc")
        self.Af.sort_indices()
        self.AfT = self.Af.T.tocsr()
        self._indptr, self._indices, self._data = self.Af.indptr, self.Af.indices, self.Af.data
        self.c = np.concatenate([self.c, np.zeros(k)])
        self.lo = np.concatenate([self.lo, np.asarray(row_lo, dtype=float)])
        self.hi = np.concatenate([self.hi, np.asarray(row_hi, dtype=float)])
        self.x = np.concatenate([self.x, R @ self.x[:n]])
        new = np.arange(n + m, n + m + k)
        self.basis = np.concatenate([self.basis, new])
        self.status = np.concatenate([self.status, np.full(k, BASIC, dtype=np.int8)])
        self.weights = np.concatenate([self.weights, np.ones(k)])
        self.m = m + k
        self._lu = None

    def col_bounds(self):
        return self.lo[: self.n].copy(), self.hi[: self.n].copy()

    def _column(self, j: int) -> np.ndarray:
        a = np.zeros(self.m)
        p0, p1 = self._indptr[j], self._indptr[j + 1]
        a[self._indices[p0:p1]] = self._data[p0:p1]
        return a

    def _refactor(self) -> None:
        B = self.Af[:, self.basis]
        try:
            self._lu = _LU(B.tocsc())
        except SingularBasis:
            self._repair_basis()
            self._sync_nonbasic()

    def _repair_basis(self) -> None:
        """Drop dependent basic columns and cover their rows with logicals."""
        import scipy.linalg as sla

        B = self.Af[:, self.basis].toarray()
        _, r, piv = sla.qr(B, pivoting=True, mode="economic")
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > 1e-9 * max(1.0, diag[0] if diag.size else 1.0)))
        keep = self.basis[np.sort(piv[:rank])]
        for j in self.basis[piv[rank:]]:
            self.status[j] = self._default_status(j, self.c[j])
        Bk = self.Af[:, keep].toarray()
        if rank:
            _, _, rows = sla.qr(Bk.T, pivoting=True, mode="economic")
            free_rows = np.sort(rows[rank:])
        else:
            free_rows = np.arange(self.m)
        self.basis = np.concatenate([keep, self.n + free_rows]).astype(int)
        self.status[self.basis] = BASIC
        self.weights = np.ones(self.m)
        self._lu = _LU(sp.csc_matrix(self.Af[:, self.basis]))

    def _sync_nonbasic(self) -> None:
        st = self.status
        for code, src in ((AT_LOWER, self.lo), (AT_UPPER, self.hi)):
            mask = st == code
            bad = mask & ~np.isfinite(src)
            if bad.any():
                for j in np.flatnonzero(bad):
                    st[j] = self._default_status(j, 0.0)
        lo_m = st == AT_LOWER
        hi_m = st == AT_UPPER
        z_m = st == AT_ZERO
        z_fix = z_m & (np.isfinite(self.lo) | np.isfinite(self.hi))
        if z_fix.any():
            for j in np.flatnonzero(z_fix):
                st[j] = self._default_status(j, 0.0)
            lo_m = st == AT_LOWER
            hi_m = st == AT_UPPER
            z_m = st == AT_ZERO
        self.x[lo_m] = self.lo[lo_m]
        self.x[hi_m] = self.hi[hi_m]
        self.x[z_m] = 0.0

    def _compute_xb(self) -> None:
        xn = self.x.copy()
        xn[self.basis] = 0.0
        rhs = -(self.Af @ xn)
        self.x[self.basis] = self._lu.ftran(rhs)

    def _duals(self) -> np.ndarray:
        return self._lu.btran(self.c[self.basis])

    def _reduced_costs(self) -> np.ndarray:
        y = self._duals()
        d = self.c - self.AfT @ y
        d[self.basis] = 0.0
        return d

    def _prepare(self) -> None:
        if self._lu is None:
            self._refactor()
        self._sync_nonbasic()
        self._compute_xb()

    def _make_dual_feasible(self, d: np.ndarray) -> bool:
        """Flip boxed nonbasics to the bound matching their reduced cost."""
        st = self.status
        tol = self.dtol
        boxed = np.isfinite(self.lo) & np.isfinite(self.hi)
        flip_up = (st == AT_LOWER) & (d < -tol) & boxed & (self.lo < self.hi)
        flip_dn = (st == AT_UPPER) & (d > tol) & boxed
        if flip_up.any() or flip_dn.any():
            st[flip_up] = AT_UPPER
            st[flip_dn] = AT_LOWER
            self._sync_nonbasic()
            self._compute_xb()
        return not self._dual_infeasible(d).any()

    def _dual_infeasible(self, d: np.ndarray) -> np.ndarray:
        st = self.status
        tol = self.dtol
        movable = self.lo < self.hi
        return movable & (
            ((st == AT_LOWER) & (d < -tol))
            | ((st == AT_UPPER) & (d > tol))
            | ((st == AT_ZERO) & (np.abs(d) > tol))
        )

    # -- public drivers -----------------------------------------------------

    def solve(self, cutoff: float | None = None) -> LpStatus:
        """Optimize from the current basis (slack basis on first call)."""
        if self.m == 0:
            return self._solve_unconstrained()
        try:
            self._prepare()
            d = self._reduced_costs()
            if self._make_dual_feasible(d):
                status = self.dual(cutoff)
                if status == LpStatus.OPTIMAL:
                    d = self._reduced_costs()
                    if self._dual_infeasible(d).any():
                        status = self.primal()
                elif status == LpStatus.NUMERICAL:
                    status = self.primal()
                return status
            return self.primal()
        except SingularBasis:
            return LpStatus.NUMERICAL

    def _solve_unconstrained(self) -> LpStatus:
        for j in range(self.n):
            cj = self.c[j]
            if cj > 0:
                if not np.isfinite(self.lo[j]):
                    return LpStatus.UNBOUNDED
                self.x[j] = self.lo[j]
            elif cj < 0:
                if not np.isfinite(self.hi[j]):
                    return LpStatus.UNBOUNDED
                self.x[j] = self.hi[j]
            else:
                self.x[j] = self.lo[j] if np.isfinite(self.lo[j]) else (self.hi[j] if np.isfinite(self.hi[j]) else 0.0)
        return LpStatus.OPTIMAL

    def primal(self) -> LpStatus:
        """Primal simplex with a composite (sum of infeasibilities) phase 1."""
        if self._lu is None:
            self._prepare()
        m = self.m
        degenerate = 0
        since_refactor = len(self._lu.etas)
        zero_c = np.zeros(self.n + m)
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            if since_refactor >= self.refactor_every:
                self._refactor()
                self._compute_xb()
                since_refactor = 0
            B = self.basis
            xb = self.x[B]
            lob, hib = self.lo[B], self.hi[B]
            below = xb < lob - self.ptol
            above = xb > hib + self.ptol
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                cfull = zero_c
            else:
                cb = self.c[B]
                cfull = self.c
            y = self._lu.btran(cb)
            d = cfull - self.AfT @ y
            d[B] = 0.0
            st = self.status
            movable = self.lo < self.hi
            up = movable & ((st == AT_LOWER) | (st == AT_ZERO)) & (d < -self.dtol)
            dn = movable & ((st == AT_UPPER) | (st == AT_ZERO)) & (d > self.dtol)
            cand = up | dn
            if not cand.any():
                return LpStatus.INFEASIBLE if phase1 else LpStatus.OPTIMAL
            bland = degenerate > _DEGENERATE_RUN
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                q = int(np.argmax(score))
            dirn = 1.0 if up[q] else -1.0
            w = self._lu.ftran(self._column(q))
            delta = -dirn * w
            wmax = np.max(np.abs(w)) if m else 0.0
            ptol_piv = _PIVOT_TOL * max(1.0, wmax)
            t = np.full(m, np.inf)
            dec = delta < -ptol_piv
            inc = delta > ptol_piv
            m_dec = dec & ~below
            tgt_dec = np.where(above, hib, lob)
            with np.errstate(invalid="ignore"):
                t[m_dec] = (xb[m_dec] - tgt_dec[m_dec]) / (-delta[m_dec])
                m_inc = inc & ~above
                tgt_inc = np.where(below, lob, hib)
                t[m_inc] = (tgt_inc[m_inc] - xb[m_inc]) / delta[m_inc]
            t = np.where(np.isnan(t), np.inf, t)
            np.maximum(t, 0.0, out=t)
            tmin = float(np.min(t)) if m else np.inf
            flip = self.hi[q] - self.lo[q]
            if flip <= tmin:
                if not np.isfinite(flip):
                    return LpStatus.NUMERICAL if phase1 else LpStatus.UNBOUNDED
                self.x[q] += dirn * flip
                self.x[B] += delta * flip
                st[q] = AT_UPPER if dirn > 0 else AT_LOWER
                self.iterations += 1
                degenerate = 0
                continue
            if not np.isfinite(tmin):
                return LpStatus.NUMERICAL if phase1 else LpStatus.UNBOUNDED
            ties = np.flatnonzero(t <= tmin + 1e-12)
            if bland:
                r = int(ties[np.argmin(B[ties])])
            else:
                r = int(ties[np.argmax(np.abs(delta[ties]))])
            step = t[r]
            leave = B[r]
            if delta[r] < 0:
                target = hib[r] if above[r] else lob[r]
            else:
                target = lob[r] if below[r] else hib[r]
            self.x[q] += dirn * step
            self.x[B] += delta * step
            self.x[leave] = target
            st[leave] = AT_LOWER if target == self.lo[leave] else AT_UPPER
            st[q] = BASIC
            self.basis[r] = q
            self._lu.update(r, w)
            since_refactor += 1
            self.iterations += 1
            degenerate = degenerate + 1 if step <= 1e-12 else 0

    def dual(self, cutoff: float | None = None) -> LpStatus:
        """Dual simplex; requires a dual feasible basis."""
        if self._lu is None:
            self._prepare()
        m = self.m
        d = self._reduced_costs()
        since_refactor = len(self._lu.etas)
        stall = 0
        best_obj = -np.inf
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            if since_refactor >= self.refactor_every:
                self._refactor()
                self._compute_xb()
                d = self._reduced_costs()
                since_refactor = 0
            B = self.basis
            xb = self.x[B]
            lob, hib = self.lo[B], self.hi[B]
            viol_lo = lob - xb
            viol_hi = xb - hib
            infeas = np.maximum(viol_lo, viol_hi)
            if not np.any(infeas > self.ptol):
                return LpStatus.OPTIMAL
            obj = float(self.c @ self.x)
            if cutoff is not None and obj > cutoff:
                return LpStatus.CUTOFF
            if obj > best_obj + 1e-12 * max(1.0, abs(obj)):
                best_obj = obj
                stall = 0
            else:
                stall += 1
            if stall > _DEGENERATE_RUN:
                r = int(np.flatnonzero(infeas > self.ptol)[0])
            else:
                score = np.where(infeas > self.ptol, infeas * infeas / self.weights, -1.0)
                r = int(np.argmax(score))
            s = 1.0 if viol_lo[r] > viol_hi[r] else -1.0
            e = np.zeros(m)
            e[r] = 1.0
            rho = self._lu.btran(e)
            alpha = self.AfT @ rho
            abar = s * alpha
            st = self.status
            movable = (self.lo < self.hi) & (st != BASIC)
            amax = np.max(np.abs(alpha[movable])) if movable.any() else 0.0
            piv = _PIVOT_TOL * max(1.0, amax)
            c_lo = movable & (st == AT_LOWER) & (abar < -piv)
            c_hi = movable & (st == AT_UPPER) & (abar > piv)
            c_zr = movable & (st == AT_ZERO) & (np.abs(abar) > piv)
            cand = np.flatnonzero(c_lo | c_hi | c_zr)
            if cand.size == 0:
                return LpStatus.INFEASIBLE
            dc = d[cand]
            eff = np.where(c_lo[cand], dc, np.where(c_hi[cand], -dc, np.abs(dc)))
            eff = np.maximum(eff, 0.0)
            aa = np.abs(abar[cand])
            ratio = eff / aa
            order = np.argsort(ratio, kind="stable")
            width = (self.hi[cand] - self.lo[cand])[order] * aa[order]
            slope = float(infeas[r])
            cum = np.cumsum(width)
            stop = np.flatnonzero(cum >= slope)
            if stop.size == 0:
                return LpStatus.INFEASIBLE
            k = int(stop[0])
            # Harris pass over the breakpoints at or beyond k
            rest = order[k:]
            harris = np.min((eff[rest] + self.dtol) / aa[rest])
            pool = rest[ratio[rest] <= harris]
            pick = pool[np.argmax(aa[pool])]
            q = int(cand[pick])
            flips = cand[order[:k]]
            if pick != order[k]:
                # skipped breakpoints between k and the Harris pick stay unflipped
                pass
            tstep = float(ratio[pick])

            leave = int(B[r])
            target = self.lo[leave] if s > 0 else self.hi[leave]

            if flips.size:
                dx = np.where(st[flips] == AT_LOWER, self.hi[flips] - self.lo[flips], self.lo[flips] - self.hi[flips])
                st[flips] = np.where(st[flips] == AT_LOWER, AT_UPPER, AT_LOWER)
                self.x[flips] += dx
                v = self.Af[:, flips] @ dx
                self.x[B] -= self._lu.ftran(v)
            w = self._lu.ftran(self._column(q))
            if abs(w[r] - alpha[q]) > 1e-6 * (1.0 + abs(w[r])) or abs(w[r]) < 1e-11:
                self._refactor()
                self._compute_xb()
                d = self._reduced_costs()
                since_refactor = 0
                self.iterations += 1
                continue
            dxq = (self.x[leave] - target) / w[r]
            self.x[B] -= w * dxq
            self.x[q] += dxq
            self.x[leave] = target

            d += tstep * abar
            d[q] = 0.0

            tau = self._lu.ftran(rho)
            wr = float(rho @ rho)
            ratio_w = w / w[r]
            newweights = self.weights - 2.0 * ratio_w * tau + ratio_w * ratio_w * wr
            np.maximum(newweights, 1e-8, out=newweights)
            newweights[r] = max(wr / (w[r] * w[r]), 1e-8)
            self.weights = newweights

            st[leave] = AT_LOWER if s > 0 else AT_UPPER
            if self.lo[leave] == self.hi[leave]:
                st[leave] = AT_LOWER
            st[q] = BASIC
            self.basis[r] = q
            d[self.basis] = 0.0
            self._lu.update(r, w)
            since_refactor += 1
            self.iterations += 1

    # -- results ------------------------------------------------------------

    def finalize(self) -> None:
        """Fresh factorization and basic solve to shed accumulated drift."""
        if self.m == 0:
            return
        self._refactor()
        self._sync_nonbasic()
        self._compute_xb()

    @property
    def primal_values(self) -> np.ndarray:
        return self.x[: self.n].copy()

    @property
    def objective(self) -> float:
        return float(self.c @ self.x)

    def row_duals(self) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        return self._duals()

    def reduced_costs(self) -> np.ndarray:
        if self.m == 0:
            return self.c[: self.n].copy()
        return self._reduced_costs()[: self.n]

    def dual_objective(self) -> float:
        """Objective of the bounded dual at the current duals."""
        if self.m == 0:
            return self.objective
        d = self._reduced_costs()
        pos = d > 0
        neg = d < 0
        with np.errstate(invalid="ignore"):
            val = np.sum(d[pos] * self.lo[pos]) + np.sum(d[neg] * self.hi[neg])
        return float(val) if np.isfinite(val) else -np.inf

