"""MILP solving: bounded simplex, branch-and-bound, enumeration oracle, external handoff."""

from .branch_bound import MilpSolution, solve_milp
from .brute_force import TooManyBinaries, brute_force_uc
from .lp import LpSolution, SolverOptions, solve_lp
from .simplex import LpStatus

__all__ = [
    "LpSolution",
    "LpStatus",
    "MilpSolution",
    "SolverOptions",
    "TooManyBinaries",
    "brute_force_uc",
    "solve_lp",
    "solve_milp",
]
