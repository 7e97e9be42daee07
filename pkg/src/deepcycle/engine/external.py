"""Hand a problem to an external MILP solver through MPS and a solution file.

The command template may contain ``{model}`` and ``{solution}``
placeholders; without them the two paths are appended.  The shorthand
``highs`` runs the bundled adapter around the ``highspy`` package.
"""

from __future__ import annotations

import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from ..problem import MilpProblem, ResidualReport, check_solution
from .branch_bound import MilpSolution, relative_gap
from .lp import SolverOptions
from .mps import MpsParseError, read_solution, write_mps


class ExternalSolverError(RuntimeError):
    pass


class SolverConfigError(ExternalSolverError):
    """No solver configured, or its executable cannot be found."""


class SolverProcessError(ExternalSolverError):
    """The solver process failed or timed out."""


class SolutionParseError(ExternalSolverError):
    """The solution file is missing or malformed."""


class SolutionValidationError(ExternalSolverError):
    """The returned point violates the problem beyond tolerance."""

    def __init__(self, message: str, report: ResidualReport):
        super().__init__(message)
        self.report = report


def build_command(template: str, model: Path, solution: Path, options: SolverOptions) -> list[str]:
    if template.strip() == "highs":
        argv = [sys.executable, "-m", "deepcycle.engine.highs_adapter", str(model), str(solution),
                "--mip-gap", repr(options.mip_gap)]
        if options.time_limit is not None:
            argv += ["--time-limit", repr(options.time_limit)]
        return argv
    if "{model}" in template or "{solution}" in template:
        return shlex.split(template.format(model=shlex.quote(str(model)), solution=shlex.quote(str(solution))))
    return shlex.split(template) + [str(model), str(solution)]


def _check_executable(argv: list[str]) -> None:
    if not argv:
        raise SolverConfigError("empty external solver command")
    exe = argv[0]
    if shutil.which(exe) is None and not Path(exe).is_file():
        raise SolverConfigError(f"external solver executable not found: {exe}")


def solve_external(problem: MilpProblem, options: SolverOptions, tol: float = 1e-6,
                   workdir=None, keep_files: bool = False) -> MilpSolution:
    """Export, run the configured solver, read back and re-validate.

    Raises :class:`SolverConfigError`, :class:`SolverProcessError`,
    :class:`SolutionParseError` or :class:`SolutionValidationError`; a
    result is only returned after the point passes ``check_solution``.
    """
    if not options.external_solver:
        raise SolverConfigError("no external solver configured")
    t0 = time.perf_counter()
    tmp = None
    if workdir is None:
        tmp = tempfile.TemporaryDirectory(prefix="deepcycle-ext-")
        workdir = tmp.name
    work = Path(workdir)
    work.mkdir(parents=True, exist_ok=True)
    model = work / "model.mps"
    sol_path = work / "solution.txt"
    try:
        argv = build_command(options.external_solver, model, sol_path, options)
        _check_executable(argv)
        write_mps(problem, model)
        if sol_path.exists():
            sol_path.unlink()
        timeout = None if options.time_limit is None else options.time_limit * 2 + 30
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise SolverProcessError(f"external solver timed out after {timeout} s") from exc
        except OSError as exc:
            raise SolverConfigError(f"cannot start external solver: {exc}") from exc
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip().splitlines()[-5:]
            raise SolverProcessError(f"external solver exited with {proc.returncode}: " + " | ".join(tail))
        if not sol_path.exists():
            raise SolutionParseError(f"external solver wrote no solution file at {sol_path}")
        try:
            x, header = read_solution(sol_path, problem.col_names)
        except MpsParseError as exc:
            raise SolutionParseError(str(exc)) from exc
        elapsed = time.perf_counter() - t0
        status = header.get("status", "optimal" if x is not None else "unknown").lower()
        if x is None:
            mapped = status if status in ("infeasible", "unbounded", "time_limit", "node_limit") else "infeasible"
            return MilpSolution(mapped, None, np.inf, np.inf, np.inf, solve_time=elapsed,
                                solver="external", message=f"external status {status}")
        report = check_solution(problem, x, tol=tol)
        if not report.ok:
            raise SolutionValidationError(
                f"external solution rejected: max residual {report.max_residual:.3g}, "
                f"integrality {report.integrality_max:.3g} (tol {tol:g})",
                report,
            )
        x = x.copy()
        ints = np.flatnonzero(problem.integer)
        x[ints] = np.round(x[ints])
        obj = problem.objective(x)
        try:
            bound = float(header.get("bound", obj))
        except ValueError:
            bound = obj
        bound = min(bound, obj)
        gap = relative_gap(obj, bound)
        st = "optimal" if status == "optimal" and gap <= options.mip_gap + 1e-9 else "feasible"
        return MilpSolution(st, x, obj, bound, gap, nodes=int(float(header.get("nodes", 0))),
                            solve_time=elapsed, solver="external",
                            message=f"external status {status}")
    finally:
        if tmp is not None and not keep_files:
            tmp.cleanup()
