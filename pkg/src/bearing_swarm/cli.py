"""Command-line entry point: ``bearing-swarm {validate,run,sweep}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import plots
from .engine import SWEEP_PARAMS, ValidationFailed, run, sweep
from .io import write_json, write_records_csv, write_sweep_csv
from .scenario import (ScenarioFormatError, bundled_path, bundled_scenarios, load_scenario,
                       validate_scenario)

log = logging.getLogger("bearing_swarm")

SEED_ENV = "BEARING_SWARM_SEED"  # reserved; the noiseless model draws no random numbers


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.exists() and path in bundled_scenarios():
        return bundled_path(path)
    return p


def _load(path: str):
    p = _resolve(path)
    if not p.exists():
        raise FileNotFoundError(f"no such scenario file: {path}")
    return load_scenario(p)


def cmd_validate(args) -> int:
    cfg = _load(args.scenario)
    report = validate_scenario(cfg)
    print(f"scenario: {cfg.name}")
    print(report.format())
    return 0 if report.ok else 1


def write_bundle(result, cfg, report, out: Path, make_plots: bool = True) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    paths = {"records": str(write_records_csv(result, out / "records.csv"))}
    summary = dict(result.summary)
    summary["seed"] = os.environ.get(SEED_ENV)
    summary["validation"] = report.to_dict()
    summary["config"] = cfg.to_dict()
    if make_plots and len(result.t):
        paths["trajectory"] = str(plots.trajectory_svg(result, cfg, out / "trajectory.svg"))
        paths["rmse"] = str(plots.rmse_svg(result, cfg, out / "rmse.svg"))
        paths["msce"] = str(plots.msce_svg(result, cfg, out / "msce.svg"))
    summary["outputs"] = paths
    paths["summary"] = str(write_json(summary, out / "summary.json"))
    return paths


def cmd_run(args) -> int:
    cfg = _load(args.scenario)
    if args.decimate is not None:
        cfg = cfg.replace(decimate=args.decimate)
    report = validate_scenario(cfg)
    if not report.ok and not args.force:
        print(report.format(), file=sys.stderr)
        print("refusing to run an invalid scenario (use --force to override)", file=sys.stderr)
        return 1
    result = run(cfg, force=args.force, report=report)
    paths = write_bundle(result, cfg, report, Path(args.out), make_plots=cfg.plots)
    s = result.summary
    print(f"{cfg.name}: {s['status']} in {s['steps']} steps, beta = {s['beta']:.6g}, "
          f"t* = {s['t_star']:.6g}")
    print(f"steady-state RMSE max = {s['steady_state_rmse_max']:.3e}, "
          f"max conservation residual = {s['max_conservation_residual']:.3e}")
    for name, p in paths.items():
        print(f"  {name}: {p}")
    if s["status"] != "completed":
        print(f"run aborted: {s['error']}", file=sys.stderr)
        return 1
    return 0


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def cmd_sweep(args) -> int:
    cfg = _load(args.scenario)
    rows = sweep(cfg, args.param, args.values, force=args.force, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = write_sweep_csv(rows, out / "sweep.csv")
    print(f"{'value':>12} {'status':>10} {'beta':>12} {'conv. time':>12} {'ss RMSE':>12} "
          f"{'max |1^T w|':>12}")
    for r in rows:
        if r["status"] == "invalid":
            print(f"{r['value']:>12.4g} {'invalid':>10}  {r['error']}")
            continue
        flag = "" if r["converged"] else "  NON-CONVERGENT"
        print(f"{r['value']:>12.4g} {r['status']:>10} {r['beta']:>12.5g} "
              f"{r['convergence_time']:>12.5g} {r['steady_state_rmse']:>12.4e} "
              f"{r['max_conservation_residual']:>12.3e}{flag}")
    print(f"table: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bearing-swarm",
        description="Distributed bearing-only tracking with signum dynamic average consensus.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario's hypotheses and print the report")
    p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate a scenario and write records, summary and plots")
    p.add_argument("scenario")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--decimate", type=int, default=None, help="record every k-th step")
    p.add_argument("--force", action="store_true", help="run even if validation fails")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="independent runs over one parameter")
    p.add_argument("scenario")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, type=_parse_values,
                   help="comma-separated values, e.g. 1e-3,1e-4")
    p.add_argument("--out", default="out")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
