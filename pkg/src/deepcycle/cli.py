"""Command-line front end.

    deepcycle solve    [--case FILE] [--levels zeros,low,...] [--wind on|off|both] ...
    deepcycle fit      SAMPLES.csv [--threshold MW] [--g-max MW]
    deepcycle synth    OUT.csv [--count N] [--noise S] [--seed N]
    deepcycle export   [--case FILE] [--levels ...] [--wind ...]
    deepcycle validate [--case FILE]

Any long flag may also come from a JSON ``--config`` file (keys use
underscores); explicit flags win.  ``DEEPCYCLE_OUT`` sets the default
output root.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (compare_scenarios, deep_cycle_metrics, emission_accounting, extract_schedule,
                       write_run_csvs)
from .emission import (DynamicEmissionParams, FitError, StaticEmissionParams, fit_dynamic, fit_report,
                       fit_static, generate_synthetic_samples, read_samples_csv, static_hourly_emission,
                       dynamic_hourly_emission, write_samples_csv)
from .engine import SolverOptions, solve_milp
from .engine.external import ExternalSolverError, solve_external
from .engine.mps import write_mps
from .formulation import LEVEL_ORDER, LEVELS, AssemblyOptions, RampCostLevel, assemble, check_solution
from .grid import (CaseParseError, CaseValidationError, bundled_case_path, load_case, validate_case,
                   with_wind)

log = logging.getLogger("deepcycle")

OUT_ENV = "DEEPCYCLE_OUT"
DEFAULT_TAU_H = 1.0 / 6.0
WALL_CLOCK_KEYS = ("solve_time_s", "started", "finished", "elapsed_s")

EXIT_OK, EXIT_RUN_FAILED, EXIT_INPUT = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case_path: Path
    out_dir: Path
    levels: list[RampCostLevel] = field(default_factory=lambda: [LEVELS[k] for k in LEVEL_ORDER])
    wind: str = "both"
    carbon_price: float = 0.0
    damage_mult: float = 0.0
    solver: SolverOptions = field(default_factory=SolverOptions)
    emission_overrides: dict = field(default_factory=dict)
    seed: int = 0
    tau: float = DEFAULT_TAU_H
    jobs: int = 1

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("at least one ramp-cost level is required")
        if self.damage_mult < 0:
            raise ConfigError("damage multiplier must be >= 0")
        if self.carbon_price < 0:
            raise ConfigError("carbon price must be >= 0")
        if self.wind not in ("on", "off", "both"):
            raise ConfigError(f"wind must be on, off or both (got {self.wind!r})")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")

    @property
    def wind_settings(self) -> list[bool]:
        return {"on": [True], "off": [False], "both": [False, True]}[self.wind]


# ---------------------------------------------------------------------------
# helpers


def parse_levels(text: str) -> list[RampCostLevel]:
    """Comma list of level names or ``label:ru:rd`` custom levels."""
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if tok in LEVELS:
            out.append(LEVELS[tok])
        elif tok.count(":") == 2:
            label, ru, rd = tok.split(":")
            try:
                out.append(RampCostLevel(label, float(ru), float(rd)))
            except ValueError as exc:
                raise ConfigError(f"bad level {tok!r}: {exc}") from exc
        else:
            raise ConfigError(f"unknown level {tok!r}; use one of {', '.join(LEVEL_ORDER)} or label:ru:rd")
    if not out:
        raise ConfigError("no levels given")
    return out


def ensure_writable(path: Path) -> Path:
    """Create ``path`` if needed and prove it accepts files."""
    try:
        path.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=path, prefix=".probe-"):
            pass
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc}") from exc
    return path


def file_hash(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(o):
    if isinstance(o, Path):
        return str(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not np.isfinite(o):
        return None
    raise TypeError(f"not serializable: {type(o)}")


def _clean(o):
    """Replace non-finite floats by None so manifests are strict JSON."""
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (float, np.floating)):
        return float(o) if np.isfinite(o) else None
    return o


def write_json(path: Path, doc) -> None:
    Path(path).write_text(json.dumps(_clean(doc), indent=2, sort_keys=True, default=_jsonable) + "\n")


def strip_wall_clock(doc):
    """Manifest copy without timing fields (for reproducibility comparisons)."""
    if isinstance(doc, dict):
        return {k: strip_wall_clock(v) for k, v in doc.items() if k not in WALL_CLOCK_KEYS}
    if isinstance(doc, list):
        return [strip_wall_clock(v) for v in doc]
    return doc


def apply_emission_overrides(case, overrides: dict):
    """``overrides`` maps plant id (or ``*``) to {"static": {...}, "dynamic": {...}}."""
    if not overrides:
        return case
    plants = []
    for c in case.coal_plants:
        ov = overrides.get(c.id, overrides.get("*"))
        if ov:
            st = replace(c.static_params, **ov.get("static", {}))
            dy = replace(c.dynamic_params, **ov.get("dynamic", {}))
            c = replace(c, static_params=st, dynamic_params=dy)
        plants.append(c)
    return replace(case, coal_plants=tuple(plants))


def run_ok(status: str, gap: float, mip_gap: float) -> bool:
    return status == "optimal" or (status == "feasible" and gap <= mip_gap + 1e-12)


def _solver_dict(opts: SolverOptions) -> dict:
    return asdict(opts)


# ---------------------------------------------------------------------------
# solve


def _run_one(cfg: RunConfig, wind: bool, level: RampCostLevel) -> dict:
    """Assemble, solve, analyse and write one level x wind run."""
    tag = f"wind_{'on' if wind else 'off'}_{level.label}"
    run_dir = cfg.out_dir / tag
    run_dir.mkdir(parents=True, exist_ok=True)
    rec = {"run": tag, "wind": wind, "level": asdict(level), "dir": tag}
    try:
        case = apply_emission_overrides(with_wind(load_case(cfg.case_path), wind), cfg.emission_overrides)
        aopts = AssemblyOptions(carbon_price=cfg.carbon_price or None, damage_mult=cfg.damage_mult)
        problem, idx = assemble(case, level=level, opts=aopts)
        rec["size"] = {"rows": problem.n_rows, "cols": problem.n_cols, "binaries": int(problem.integer.sum())}
        if cfg.solver.external_solver:
            sol = solve_external(problem, cfg.solver)
        else:
            sol = solve_milp(problem, cfg.solver)
        rec.update(sol.summary())
        rec["ok"] = run_ok(sol.status, sol.gap, cfg.solver.mip_gap)
        if sol.x is None:
            rec["artifacts"] = []
            return rec
        rep = check_solution(problem, sol.x)
        rec["max_residual"] = rep.max_residual
        sched = extract_schedule(sol, idx, case, level)
        em = emission_accounting(sched, case, carbon_price=cfg.carbon_price, tau=cfg.tau)
        cm = deep_cycle_metrics(sched, case)
        paths = write_run_csvs(sched, em, run_dir)
        rec["artifacts"] = [str(p.relative_to(cfg.out_dir)) for p in paths]
        rec["emissions_tCO2"] = {"total": em.expected_total, "static": em.expected_static,
                                 "dynamic_increment": em.expected_dynamic}
        rec["sum_alpha_beta_MW"] = cm.total_alpha_beta
        rec["energy_MWh"] = {g: sched.energy(g) for g in sched.gen_ids}
        rec["_payload"] = (sched, em, cm)
    except (CaseParseError, CaseValidationError, ExternalSolverError, ValueError) as exc:
        rec.update({"status": "error", "ok": False, "message": f"{type(exc).__name__}: {exc}"})
    return rec


def _run_worker(args):
    return _run_one(*args)


def _plot_rows(tag, sched, cm):
    """Tidy plot data: one row per (run, series, entity, scenario, slice)."""
    rows = []
    for k in range(sched.K):
        for t in range(sched.T):
            for e, gid in enumerate(sched.gen_ids):
                rows.append((tag, "dispatch_MW", gid, k, t, sched.g[e, t, k]))
            for c, cid in enumerate(sched.coal_ids):
                rows.append((tag, "unit_I_MW", cid, k, t, sched.g_I[c, t, k]))
                rows.append((tag, "unit_II_MW", cid, k, t, sched.g_II[c, t, k]))
                rows.append((tag, "alpha_MW", cid, k, t, sched.alpha[c, t, k]))
                rows.append((tag, "beta_MW", cid, k, t, sched.beta[c, t, k]))
    return rows


def cmd_solve(cfg: RunConfig) -> int:
    ensure_writable(cfg.out_dir)
    case_hash = file_hash(cfg.case_path)
    started = time.time()
    jobs = [(cfg, w, lv) for w in cfg.wind_settings for lv in cfg.levels]
    manifest = {
        "command": "solve",
        "version": __version__,
        "inputs": {"case": str(cfg.case_path), "case_sha256": case_hash,
                   "config_sha256": hashlib.sha256(_config_key(cfg).encode()).hexdigest()},
        "options": {"levels": [asdict(lv) for lv in cfg.levels], "wind": cfg.wind,
                    "carbon_price": cfg.carbon_price, "damage_mult": cfg.damage_mult, "tau_h": cfg.tau,
                    "seed": cfg.seed, "solver": _solver_dict(cfg.solver),
                    "emission_overrides": cfg.emission_overrides},
        "complete": False,
        "runs": [],
        "started": started,
    }
    write_json(cfg.out_dir / "manifest.json", manifest)

    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = pool.map(_run_worker, jobs)
    else:
        results = (_run_one(*job) for job in jobs)
    recs, payloads = [], {}
    for rec in results:
        if "_payload" in rec:
            payloads[rec["run"]] = rec.pop("_payload")
        recs.append(rec)
        log.info("%s: %s objective=%s gap=%s", rec["run"], rec.get("status"), rec.get("objective"), rec.get("gap"))
        manifest["runs"] = recs
        write_json(cfg.out_dir / "manifest.json", manifest)

    comparisons = {}
    case0 = load_case(cfg.case_path)
    plot = []
    for wind in cfg.wind_settings:
        tagged = [r for r in recs if r["wind"] == wind and r["run"] in payloads]
        for r in tagged:
            sched, _, cm = payloads[r["run"]]
            plot.extend(_plot_rows(r["run"], sched, cm))
        if len(tagged) >= 2:
            runs = [(r["level"]["label"], *payloads[r["run"]]) for r in tagged]
            table = compare_scenarios(runs, with_wind(case0, wind))
            name = f"comparison_wind_{'on' if wind else 'off'}"
            table.to_csv(cfg.out_dir / f"{name}.csv")
            (cfg.out_dir / f"{name}.txt").write_text(table.to_text() + "\n")
            comparisons[name] = {"trend_violations": table.trend_violations}
    if plot:
        import csv
        with open(cfg.out_dir / "plot_data.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["run", "series", "entity", "scenario", "slice", "value"])
            w.writerows((a, b, c, k, t, f"{v:.9g}") for a, b, c, k, t, v in plot)
    all_ok = all(r.get("ok") for r in recs)
    manifest.update({"runs": recs, "comparisons": comparisons, "complete": all_ok,
                     "finished": time.time()})
    manifest["elapsed_s"] = manifest["finished"] - started
    write_json(cfg.out_dir / "manifest.json", manifest)
    for r in recs:
        print(f"{r['run']}: {r.get('status')} objective={r.get('objective')} gap={r.get('gap')}")
    if not all_ok:
        print("one or more runs did not reach optimality within the gap; see manifest.json", file=sys.stderr)
    return EXIT_OK if all_ok else EXIT_RUN_FAILED


def _config_key(cfg: RunConfig) -> str:
    doc = {"levels": [asdict(lv) for lv in cfg.levels], "wind": cfg.wind, "carbon_price": cfg.carbon_price,
           "damage_mult": cfg.damage_mult, "tau": cfg.tau, "solver": _solver_dict(cfg.solver),
           "emission_overrides": cfg.emission_overrides, "seed": cfg.seed}
    return json.dumps(doc, sort_keys=True, default=_jsonable)


# ---------------------------------------------------------------------------
# export


def cmd_export(cfg: RunConfig) -> int:
    ensure_writable(cfg.out_dir)
    files = []
    for wind in cfg.wind_settings:
        case = apply_emission_overrides(with_wind(load_case(cfg.case_path), wind), cfg.emission_overrides)
        for level in cfg.levels:
            aopts = AssemblyOptions(carbon_price=cfg.carbon_price or None, damage_mult=cfg.damage_mult)
            problem, idx = assemble(case, level=level, opts=aopts)
            name = f"wind_{'on' if wind else 'off'}_{level.label}.mps"
            write_mps(problem, cfg.out_dir / name)
            files.append({"file": name, "rows": problem.n_rows, "cols": problem.n_cols,
                          "binaries": int(problem.integer.sum()), "objective_offset": problem.objective_offset})
            print(f"wrote {cfg.out_dir / name} ({problem.n_rows} rows, {problem.n_cols} cols)")
    write_json(cfg.out_dir / "manifest.json", {
        "command": "export", "version": __version__,
        "inputs": {"case": str(cfg.case_path), "case_sha256": file_hash(cfg.case_path)},
        "files": files, "complete": True,
    })
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit / synth


def cmd_fit(samples_path: Path, out_dir: Path, threshold: float | None, g_max: float, seed: int = 0) -> int:
    ensure_writable(out_dir)
    samples = read_samples_csv(samples_path)
    threshold = g_max / 2.0 if threshold is None else threshold
    static_rows = [s for s in samples if s.static_flag]
    try:
        sfit = fit_static(static_rows)
    except FitError as exc:
        print(f"static fit: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        dfit = fit_dynamic(samples, sfit.params, threshold, seed=seed, static_cov=sfit.cov)
    except FitError as exc:
        print(f"dynamic fit: {exc}", file=sys.stderr)
        return EXIT_INPUT
    (out_dir / "fit_report.json").write_text(
        fit_report(sfit, dfit, threshold=threshold, g_max=g_max, kappa=threshold / g_max,
                   n_samples=len(samples), n_static=len(static_rows)) + "\n")
    import csv
    with open(out_dir / "fit_residuals.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["g_prev", "g", "g_next", "static_flag", "observed_tCO2", "predicted_tCO2", "residual_tCO2"])
        for s in samples:
            if s.static_flag:
                pred = static_hourly_emission(sfit.params, s.g)
            else:
                pred = dynamic_hourly_emission(sfit.params, dfit.params, s.g_prev, s.g, s.g_next)
            w.writerow([repr(s.g_prev), repr(s.g), repr(s.g_next), int(s.static_flag), repr(s.emission),
                        repr(float(pred)), repr(s.emission - float(pred))])
    write_json(out_dir / "manifest.json", {
        "command": "fit", "version": __version__,
        "inputs": {"samples": str(samples_path), "samples_sha256": file_hash(samples_path)},
        "options": {"threshold": threshold, "g_max": g_max, "seed": seed},
        "static": sfit.to_dict(), "dynamic": dfit.to_dict(), "complete": True,
    })
    print(f"static  f0={sfit.params.f0:.6g} f1={sfit.params.f1:.6g} N1={sfit.params.N1:.6g}")
    if dfit.identified:
        print(f"dynamic b={dfit.params.b:.6g} tau={dfit.params.tau:.6g} N2={dfit.params.N2:.6g}")
    else:
        print(f"dynamic parameters not identified: {dfit.message}")
    return EXIT_OK


def cmd_synth(out_path: Path, ps: StaticEmissionParams, pd: DynamicEmissionParams, g_max: float, count: int,
              noise: float, seed: int) -> int:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    ensure_writable(out_path.parent)
    samples = generate_synthetic_samples(ps, pd, g_max, count, noise, seed)
    write_samples_csv(samples, out_path)
    write_json(out_path.with_suffix(out_path.suffix + ".manifest.json"), {
        "command": "synth", "version": __version__,
        "options": {"static": asdict(ps), "dynamic": asdict(pd), "g_max": g_max, "count": count,
                    "noise": noise, "seed": seed},
        "outputs": {"samples": out_path.name, "samples_sha256": file_hash(out_path)},
        "complete": True,
    })
    print(f"wrote {count} samples to {out_path}")
    return EXIT_OK


def cmd_validate(case_path: Path) -> int:
    try:
        case = load_case(case_path)
    except CaseValidationError as exc:
        for path, msg in exc.violations:
            print(f"{path}: {msg}")
        return EXIT_INPUT
    except CaseParseError as exc:
        print(exc)
        return EXIT_INPUT
    assert not validate_case(case)
    print(f"{case.name}: {case.network.n_buses} buses, {len(case.network.lines)} lines, "
          f"{len(case.generators)} generators ({len(case.coal_plants)} coal), {len(case.storages)} storage, "
          f"{case.horizon} slices, {len(case.scenarios)} scenario(s): OK")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deepcycle", description="Unit commitment with deep-cycling costs and dynamic CO2")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, solve=True):
        p.add_argument("--config", type=Path, help="JSON file supplying defaults for any flag")
        p.add_argument("--case", type=Path)
        p.add_argument("--out", type=Path)
        if solve:
            p.add_argument("--levels", default=None, help="comma list: zeros,low,high,very_high or label:ru:rd")
            p.add_argument("--wind", choices=("on", "off", "both"), default=None)
            p.add_argument("--carbon-price", type=float, default=None, help="$/tCO2 on ramp emission blocks")
            p.add_argument("--damage-mult", type=float, default=None, help="internal-damage multiple of the carbon component")
            p.add_argument("--mip-gap", type=float, default=None)
            p.add_argument("--time-limit", type=float, default=None)
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--external-solver", default=None, help="command template or 'highs'")
            p.add_argument("--tau", type=float, default=None, help="transition time for emission accounting, h")
            p.add_argument("--jobs", type=int, default=None, help="parallel runs (default 1)")

    common(sub.add_parser("solve", help="solve level x wind sweeps and write reports"))
    common(sub.add_parser("export", help="write assembled problems in MPS format"))
    p = sub.add_parser("validate", help="load and validate a case file")
    common(p, solve=False)

    p = sub.add_parser("fit", help="fit static and dynamic emission parameters to a sample CSV")
    p.add_argument("samples", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--threshold", type=float, default=None, help="MW; default g_max/2")
    p.add_argument("--g-max", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("synth", help="generate a synthetic emission sample CSV")
    p.add_argument("output", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--noise", type=float, default=None, help="relative noise sigma")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--g-max", type=float, default=None)
    for name in ("f0", "f1", "N1", "b", "tau", "N2"):
        p.add_argument(f"--{name}", type=float, default=None)
    return ap


_DEFAULTS = {
    "levels": ",".join(LEVEL_ORDER), "wind": "both", "carbon_price": 0.0, "damage_mult": 0.0,
    "mip_gap": 1e-4, "time_limit": None, "seed": 0, "external_solver": None, "tau": DEFAULT_TAU_H,
    "jobs": 1, "threshold": None, "g_max": 600.0, "count": 500, "noise": 0.02,
}


def _merge(args: argparse.Namespace, defaults: bool = True) -> dict:
    """Flags > config file > defaults."""
    conf = {}
    if getattr(args, "config", None):
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(conf, dict):
            raise ConfigError("config file must hold a JSON object")
    merged = dict(_DEFAULTS) if defaults else {}
    merged.update({k.replace("-", "_"): v for k, v in conf.items()})
    merged.update({k: v for k, v in vars(args).items() if v is not None})
    return merged


def _out_root(val) -> Path:
    if val:
        return Path(val)
    return Path(os.environ.get(OUT_ENV, "deepcycle-out"))


def config_from_args(m: dict) -> RunConfig:
    levels = m["levels"]
    if isinstance(levels, str):
        levels = parse_levels(levels)
    else:
        levels = [LEVELS[lv] if isinstance(lv, str) else RampCostLevel(**lv) for lv in levels]
    try:
        solver = SolverOptions(mip_gap=float(m["mip_gap"]),
                               time_limit=None if m["time_limit"] is None else float(m["time_limit"]),
                               external_solver=m["external_solver"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        case_path=Path(m.get("case") or bundled_case_path()),
        out_dir=_out_root(m.get("out")),
        levels=levels, wind=m["wind"], carbon_price=float(m["carbon_price"]),
        damage_mult=float(m["damage_mult"]), solver=solver,
        emission_overrides=m.get("emission_overrides") or {}, seed=int(m["seed"]),
        tau=float(m["tau"]), jobs=int(m["jobs"]),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        m = _merge(args)
        if args.command in ("solve", "export"):
            cfg = config_from_args(m)
            if not cfg.case_path.exists():
                raise ConfigError(f"case file not found: {cfg.case_path}")
            return cmd_solve(cfg) if args.command == "solve" else cmd_export(cfg)
        if args.command == "validate":
            return cmd_validate(Path(m.get("case") or bundled_case_path()))
        if args.command == "fit":
            return cmd_fit(Path(m["samples"]), _out_root(m.get("out")), m["threshold"], float(m["g_max"]),
                           int(m["seed"]))
        if args.command == "synth":
            given = _merge(args, defaults=False)  # emission parameters default to the dataclass values
            ps = StaticEmissionParams(**{k: float(given[k]) for k in ("f0", "f1", "N1") if given.get(k) is not None})
            pd = DynamicEmissionParams(**{k: float(given[k]) for k in ("b", "tau", "N2") if given.get(k) is not None})
            return cmd_synth(Path(m["output"]), ps, pd, float(m["g_max"]), int(m["count"]), float(m["noise"]),
                             int(m["seed"]))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CaseParseError, CaseValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
