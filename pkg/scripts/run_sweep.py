"""Solve the bundled case at every ramp-cost level, with and without wind,
using the in-repo engine and (when highspy is installed) HiGHS, and print
objective, gap, wall time and the coal ramping total per run.

    python3 scripts/run_sweep.py [--time-limit S] [--no-external] [--branching pseudocost|most_fractional]
"""

import argparse
import time

from deepcycle.analysis import deep_cycle_metrics, extract_schedule
from deepcycle.engine import SolverOptions, solve_milp
from deepcycle.engine.external import ExternalSolverError, solve_external
from deepcycle.formulation import LEVEL_ORDER, LEVELS, assemble
from deepcycle.grid import bundled_case_path, load_case, with_wind


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--time-limit", type=float, default=600.0)
    ap.add_argument("--branching", default="pseudocost")
    ap.add_argument("--no-external", action="store_true")
    args = ap.parse_args()

    base = load_case(bundled_case_path())
    print(f"{'wind':5} {'level':10} {'status':8} {'objective':>12} {'gap':>8} {'time_s':>7} "
          f"{'sum_ab':>8} {'highs':>12}")
    for wind in (False, True):
        case = with_wind(base, wind)
        for label in LEVEL_ORDER:
            problem, idx = assemble(case, level=LEVELS[label])
            opts = SolverOptions(time_limit=args.time_limit, branching=args.branching)
            t0 = time.perf_counter()
            sol = solve_milp(problem, opts)
            wall = time.perf_counter() - t0
            ab = float("nan")
            if sol.x is not None:
                sched = extract_schedule(sol, idx, case, LEVELS[label])
                ab = deep_cycle_metrics(sched, case).total_alpha_beta
            ext = ""
            if not args.no_external:
                try:
                    ext = f"{solve_external(problem, SolverOptions(external_solver='highs')).objective:12.3f}"
                except ExternalSolverError as exc:
                    ext = f"n/a ({exc})"
            print(f"{'on' if wind else 'off':5} {label:10} {sol.status:8} {sol.objective:12.3f} {sol.gap:8.1e} "
                  f"{wall:7.1f} {ab:8.3f} {ext:>12}", flush=True)


if __name__ == "__main__":
    main()
