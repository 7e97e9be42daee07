"""LP entry point and the option/result types shared by the engine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..problem import MilpProblem
from .simplex import BoundedSimplex, LpStatus


@dataclass(frozen=True)
class SolverOptions:
    mip_gap: float = 1e-4
    int_tol: float = 1e-6
    primal_tol: float = 1e-7
    dual_tol: float = 1e-7
    node_limit: int | None = None
    time_limit: float | None = None
    branching: str = "pseudocost"
    node_selection: str = "best_bound_plunge"
    external_solver: str | None = None
    lp_iteration_limit: int | None = None
    reduced_cost_fixing: bool = True
    cut_rounds: int = 40
    cuts_per_round: int = 100
    heuristics: bool = True
    rins_interval: int = 200

    def __post_init__(self):
        for name in ("mip_gap", "int_tol", "primal_tol", "dual_tol"):
            if getattr(self, name) < 0 or (name != "mip_gap" and getattr(self, name) == 0):
                raise ValueError(f"{name} must be positive")
        if self.branching not in ("most_fractional", "pseudocost"):
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.cut_rounds < 0 or self.cuts_per_round < 1:
            raise ValueError("cut_rounds must be >= 0 and cuts_per_round >= 1")
        if self.rins_interval < 1:
            raise ValueError("rins_interval must be >= 1")
        if self.node_selection not in ("best_bound_plunge", "best_bound", "depth_first"):
            raise ValueError(f"unknown node selection {self.node_selection!r}")


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual_objective: float = np.nan
    iterations: int = 0


def make_simplex(problem: MilpProblem, options: SolverOptions) -> BoundedSimplex:
    return BoundedSimplex(
        problem.A,
        problem.row_lo,
        problem.row_hi,
        problem.c,
        problem.col_lo,
        problem.col_hi,
        primal_tol=options.primal_tol,
        dual_tol=options.dual_tol,
        max_iter=options.lp_iteration_limit,
    )


def lp_result(problem: MilpProblem, lp: BoundedSimplex, status: LpStatus) -> LpSolution:
    if status == LpStatus.OPTIMAL:
        lp.finalize()
        x = lp.primal_values
        return LpSolution(
            status=status,
            x=x,
            objective=problem.objective(x),
            duals=lp.row_duals(),
            reduced_costs=lp.reduced_costs(),
            dual_objective=lp.dual_objective() + problem.objective_offset,
            iterations=lp.iterations,
        )
    return LpSolution(
        status=status,
        x=lp.primal_values,
        objective=np.nan,
        duals=np.zeros(problem.n_rows),
        iterations=lp.iterations,
    )


def solve_lp(problem: MilpProblem, options: SolverOptions | None = None) -> LpSolution:
    """Solve the continuous relaxation of ``problem`` (integrality ignored)."""
    options = options or SolverOptions()
    lp = make_simplex(problem, options)
    status = lp.solve()
    return lp_result(problem, lp, status)
