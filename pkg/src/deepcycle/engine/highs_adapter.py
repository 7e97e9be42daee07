"""Command-line shim: solve an MPS file with HiGHS and write a name/value solution.

    python3 -m deepcycle.engine.highs_adapter model.mps solution.txt [--mip-gap G] [--time-limit S]
"""

from __future__ import annotations

import argparse
import sys

from .mps import write_solution


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--mip-gap", type=float, default=1e-4)
    ap.add_argument("--time-limit", type=float, default=None)
    args = ap.parse_args(argv)
    try:
        import highspy
    except ImportError:
        print("highspy is not installed", file=sys.stderr)
        return 3

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", args.mip_gap)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    if args.time_limit is not None:
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.model) == highspy.HighsStatus.kError:
        print(f"cannot read {args.model}", file=sys.stderr)
        return 2
    h.run()
    ms = h.getModelStatus()
    status = {
        highspy.HighsModelStatus.kOptimal: "optimal",
        highspy.HighsModelStatus.kInfeasible: "infeasible",
        highspy.HighsModelStatus.kUnbounded: "unbounded",
        highspy.HighsModelStatus.kUnboundedOrInfeasible: "infeasible",
        highspy.HighsModelStatus.kTimeLimit: "time_limit",
    }.get(ms, str(ms))
    info = h.getInfo()
    lp = h.getLp()
    header = {"status": status, "solver": "highs"}
    sol = h.getSolution()
    has_point = info.primal_solution_status == 2 and status not in ("infeasible", "unbounded")
    if has_point:
        header["objective"] = repr(info.objective_function_value)
        if lp.integrality_ and len(lp.integrality_):
            header["bound"] = repr(info.mip_dual_bound)
            header["nodes"] = str(info.mip_node_count)
        write_solution(args.solution, lp.col_names_, sol.col_value, header)
    else:
        write_solution(args.solution, [], [], header)
    return 0


if __name__ == "__main__":
    sys.exit(main())
