"""Solver-agnostic sparse MILP container and the residual checker."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np
import scipy.sparse as sp

INF = np.inf


@dataclass(frozen=True, eq=False)
class MilpProblem:
    """min c'x  s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi.

    Rows carry a ``row_family`` tag (e.g. ``"10.4"``) and an entity / slice /
    scenario annotation; columns carry a ``col_family`` tag used when bound
    families are reported by :func:`check_solution`.
    """

    c: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    col_lo: np.ndarray
    col_hi: np.ndarray
    integer: np.ndarray
    row_names: tuple[str, ...]
    col_names: tuple[str, ...]
    row_family: np.ndarray
    col_family: np.ndarray
    row_entity: tuple[str, ...] = ()
    row_t: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    row_k: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    objective_offset: float = 0.0
    name: str = "problem"

    def __post_init__(self):
        m, n = self.A.shape
        for label, arr, size in (
            ("c", self.c, n),
            ("col_lo", self.col_lo, n),
            ("col_hi", self.col_hi, n),
            ("integer", self.integer, n),
            ("row_lo", self.row_lo, m),
            ("row_hi", self.row_hi, m),
        ):
            if len(arr) != size:
                raise ValueError(f"{label} has length {len(arr)}, expected {size}")
        if len(self.row_names) != m or len(self.col_names) != n:
            raise ValueError("row/column name counts do not match A")
        bad = np.flatnonzero(self.col_lo > self.col_hi)
        if bad.size:
            j = bad[0]
            raise ValueError(
                f"infeasible bounds on column {self.col_names[j]}: "
                f"{self.col_lo[j]} > {self.col_hi[j]}"
            )
        bad = np.flatnonzero(self.row_lo > self.row_hi)
        if bad.size:
            i = bad[0]
            raise ValueError(
                f"infeasible range on row {self.row_names[i]} "
                f"[{self.row_family[i]}]: {self.row_lo[i]} > {self.row_hi[i]}"
            )

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    @property
    def sense(self) -> np.ndarray:
        """Per-row sense: 'E', 'L', 'G', or 'R' (ranged, both sides finite)."""
        lo_f = np.isfinite(self.row_lo)
        hi_f = np.isfinite(self.row_hi)
        out = np.full(self.n_rows, "N", dtype="<U1")
        out[lo_f & hi_f] = "R"
        out[lo_f & hi_f & (self.row_lo == self.row_hi)] = "E"
        out[~lo_f & hi_f] = "L"
        out[lo_f & ~hi_f] = "G"
        return out

    @property
    def rhs(self) -> np.ndarray:
        s = self.sense
        return np.where((s == "L"), self.row_hi, np.where(s == "N", 0.0, self.row_lo))

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.objective_offset)

    def relaxed(self) -> "MilpProblem":
        return self.with_bounds(integer=np.zeros(self.n_cols, dtype=bool))

    def with_bounds(self, col_lo=None, col_hi=None, integer=None) -> "MilpProblem":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        if col_lo is not None:
            kw["col_lo"] = np.asarray(col_lo, dtype=float)
        if col_hi is not None:
            kw["col_hi"] = np.asarray(col_hi, dtype=float)
        if integer is not None:
            kw["integer"] = np.asarray(integer, dtype=bool)
        return MilpProblem(**kw)

    def col_index(self, name: str) -> int:
        try:
            lookup = self.__dict__["_col_lookup"]
        except KeyError:
            lookup = {nm: j for j, nm in enumerate(self.col_names)}
            object.__setattr__(self, "_col_lookup", lookup)
        return lookup[name]


@dataclass
class ResidualReport:
    """Max violation per family plus integrality and objective."""

    family_max: dict[str, float]
    family_rows: dict[str, int]
    worst: dict[str, str]
    integrality_max: float
    objective: float
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.family_max.values(), default=0.0)

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tol and self.integrality_max <= self.tol

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "objective": self.objective,
            "tol": self.tol,
            "max_residual": self.max_residual,
            "integrality_max": self.integrality_max,
            "families": {
                f: {"max": self.family_max[f], "count": self.family_rows[f], "worst": self.worst[f]}
                for f in sorted(self.family_max, key=_family_sort_key)
            },
        }


def _family_sort_key(f: str):
    head, _, tail = f.partition(".")
    try:
        return (0, int(head), int(tail or 0), f)
    except ValueError:
        return (1, 0, 0, f)


def row_violation(problem: MilpProblem, x: np.ndarray) -> np.ndarray:
    act = problem.A @ x
    return np.maximum(np.maximum(problem.row_lo - act, act - problem.row_hi), 0.0)


def check_solution(problem: MilpProblem, x, tol: float = 1e-6, families=None) -> ResidualReport:
    """Report the worst violation of every row family and column-bound family.

    ``families`` optionally lists family tags that must appear in the report
    even when they own no rows (reported with zero violation).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n_cols,):
        raise ValueError(f"x has shape {x.shape}, expected ({problem.n_cols},)")
    fam_max: dict[str, float] = {}
    fam_rows: dict[str, int] = {}
    worst: dict[str, str] = {}

    viol = row_violation(problem, x)
    for fam in np.unique(problem.row_family):
        idx = np.flatnonzero(problem.row_family == fam)
        k = idx[np.argmax(viol[idx])]
        fam_max[str(fam)] = float(viol[k])
        fam_rows[str(fam)] = int(idx.size)
        worst[str(fam)] = problem.row_names[k]

    bviol = np.maximum(np.maximum(problem.col_lo - x, x - problem.col_hi), 0.0)
    bviol = np.nan_to_num(bviol, nan=np.inf)
    for fam in np.unique(problem.col_family):
        idx = np.flatnonzero(problem.col_family == fam)
        k = idx[np.argmax(bviol[idx])]
        key = str(fam)
        if key in fam_max:
            if bviol[k] > fam_max[key]:
                worst[key] = problem.col_names[k]
            fam_max[key] = max(fam_max[key], float(bviol[k]))
            fam_rows[key] += int(idx.size)
        else:
            fam_max[key] = float(bviol[k])
            fam_rows[key] = int(idx.size)
            worst[key] = problem.col_names[k]

    for fam in families or ():
        if fam not in fam_max:
            fam_max[fam] = 0.0
            fam_rows[fam] = 0
            worst[fam] = ""

    ints = np.flatnonzero(problem.integer)
    int_max = float(np.max(np.abs(x[ints] - np.round(x[ints])))) if ints.size else 0.0
    return ResidualReport(fam_max, fam_rows, worst, int_max, problem.objective(x), tol)


def make_problem(
    c,
    A,
    row_lo,
    row_hi,
    col_lo=None,
    col_hi=None,
    integer=None,
    *,
    row_family=None,
    col_family=None,
    name: str = "problem",
) -> MilpProblem:
    """Convenience constructor with generated names (``x0..``, ``r0..``)."""
    A = sp.csr_matrix(np.atleast_2d(A) if not sp.issparse(A) else A, dtype=float)
    m, n = A.shape
    col_lo = np.zeros(n) if col_lo is None else np.asarray(col_lo, dtype=float)
    col_hi = np.full(n, INF) if col_hi is None else np.asarray(col_hi, dtype=float)
    integer = np.zeros(n, dtype=bool) if integer is None else np.asarray(integer, dtype=bool)
    return MilpProblem(
        c=np.asarray(c, dtype=float),
        A=A,
        row_lo=np.asarray(row_lo, dtype=float),
        row_hi=np.asarray(row_hi, dtype=float),
        col_lo=col_lo,
        col_hi=col_hi,
        integer=integer,
        row_names=tuple(f"r{i}" for i in range(m)),
        col_names=tuple(f"x{j}" for j in range(n)),
        row_family=np.asarray(row_family if row_family is not None else ["row"] * m, dtype=object),
        col_family=np.asarray(col_family if col_family is not None else ["bounds"] * n, dtype=object),
        row_t=np.zeros(m, dtype=int),
        row_k=np.zeros(m, dtype=int),
        name=name,
    )
