import time

import numpy as np
import pytest

from deepcycle.engine import SolverOptions, solve_milp
from deepcycle.formulation import LEVELS, assemble
from deepcycle.grid import bundled_case_path, case_from_dict, load_case, with_wind
from oracles import tiny_uc_doc

BUNDLED_TIME_LIMIT = 600.0


class BundledRuns:
    """Solves of the bundled case, one per (wind, level), done once per session."""

    def __init__(self):
        self._base = load_case(bundled_case_path())
        self._cache = {}

    def get(self, wind: bool, level: str):
        key = (wind, level)
        if key not in self._cache:
            case = with_wind(self._base, wind)
            problem, idx = assemble(case, level=LEVELS[level])
            t0 = time.perf_counter()
            sol = solve_milp(problem, SolverOptions(time_limit=BUNDLED_TIME_LIMIT))
            wall = time.perf_counter() - t0
            self._cache[key] = (case, problem, idx, sol, wall)
        return self._cache[key]


@pytest.fixture(scope="session")
def bundled_runs():
    return BundledRuns()


def tiny_problem(seed: int, **kw):
    case = case_from_dict(tiny_uc_doc(np.random.default_rng(seed), **kw))
    problem, idx = assemble(case)
    return case, problem, idx


ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
