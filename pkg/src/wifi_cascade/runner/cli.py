"""Command-line front end: analyze | sweep | simulate | validate | reproduce."""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .. import analytic, oracle, validation
from ..mac import ScenarioError, ScenarioSpec, run_simulation
from ..mac.engine import NODE_COLUMNS, SERIES_COLUMNS
from ..mac.scenario import load_to_rate
from ..mac.sweep import DEFAULT_REPLICATIONS, sweep_attacker_load, sweep_node_load
from . import figures
from .output import RunDir
from .scenario_file import format_scenario, parse_scenario

SWEEP_KINDS = ("attacker_load", "node_load", "h_curve")


def parse_grid(text: str) -> list[float]:
    """``LO:HI:STEP`` inclusive of HI (up to rounding)."""
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like LO:HI:STEP, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs STEP > 0 and HI >= LO")
    n = int(math.floor((hi - lo) / step + 1e-9))
    digits = max(0, -int(math.floor(math.log10(step))) + 2)
    return [round(lo + k * step, digits) for k in range(n + 1)]


def parse_retry_limits(text: str) -> list[float]:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        out.append(math.inf if part in ("inf", "infinity") else int(part))
    return out


def _base_spec(args) -> ScenarioSpec:
    spec = parse_scenario(args.scenario) if args.scenario else figures.FIG5_BASE
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "duration", None) is not None:
        changes["duration"] = args.duration
    if args.retry_limit is not None:
        limits = parse_retry_limits(args.retry_limit)
        if len(limits) == 1 and limits[0] != math.inf:
            changes["retry_limit"] = int(limits[0])
    if getattr(args, "rho", None) is not None:
        changes["arrival_rate"] = load_to_rate(args.rho, spec)
    return spec.replace(**changes) if changes else spec


def _inputs(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out") and v is not None}


def _out_dir(args) -> Path:
    return Path(args.out) if args.out else Path("runs") / args.command


def cmd_analyze(args) -> int:
    if args.scenario:
        spec = parse_scenario(args.scenario)
        rho = args.rho if args.rho is not None else spec.arrival_rate * spec.packet_time
        limits = [spec.retry_limit] if args.retry_limit is None else parse_retry_limits(args.retry_limit)
    else:
        if args.rho is None or args.retry_limit is None:
            print("analyze needs --rho and --retry-limit, or --scenario", file=sys.stderr)
            return 2
        rho = args.rho
        limits = parse_retry_limits(args.retry_limit)
    records = []
    for R in limits:
        rec = analytic.model_record(rho, R)
        if rec["R"] == math.inf:
            rec["R"] = "inf"
        if rec["boundary"]:
            warnings.warn(f"rho={rho} sits on a regime boundary for R={R}; regime left unclassified")
        records.append(rec)
    for rec in records:
        pts = ", ".join(f"{p['omega']:.6g} {p['stability']}" for p in rec["fixed_points"])
        tp = rec["transition_point"]
        print(f"rho={rho:g} R={rec['R']}: {rec['regime']}"
              + (f" at {tp:.6g}" if tp is not None else "")
              + f"; fixed points: {pts}; bounds (1/R, h_max, h_R(omega_bar)) = "
              f"({rec['bounds']['lower']:.6g}, {rec['bounds']['upper']:.6g}, {rec['bounds']['guaranteed_upper']:.6g})")
    if args.out:
        run = RunDir(args.out, "analyze", args.seed, _inputs(args))
        run.write_json("analysis.json", records)
        run.finish()
    return 0


def cmd_sweep(args) -> int:
    run = RunDir(_out_dir(args), "sweep", args.seed, _inputs(args))
    if args.kind == "h_curve":
        limits = parse_retry_limits(args.retry_limit or "4,7,10")
        grid = np.array(args.grid or parse_grid("0:1:0.001"))
        header = ("omega",) + tuple(f"h_R{'inf' if R == math.inf else int(R)}" for R in limits)
        curves = [analytic.h_values(grid, R) for R in limits]
        rows = [[float(w), *(float(c[k]) for c in curves)] for k, w in enumerate(grid)]
        run.write_csv("h_curve.csv", header, rows)
        maxima = {h: analytic.h_max(R)[1] for h, R in zip(header[1:], limits)}
        run.write_json("summary.json", {"maxima": maxima})
        for h, v in maxima.items():
            print(f"{h}: max {v:.6f}")
    elif args.kind == "attacker_load":
        spec = _base_spec(args)
        grid = args.grid or list(figures.FIG5A_RHO0)
        table = sweep_attacker_load(spec, grid, args.replications, args.jobs)
        header = ("rho0",) + tuple(f"u_{i}" for i in range(spec.n_pairs))
        run.write_csv("attacker_load.csv", header,
                      [[x, *map(float, table.mean[k])] for k, x in enumerate(table.points)])
        run.write_text("scenario.txt", format_scenario(spec))
        for k, x in enumerate(table.points):
            print(f"rho0={x:g}: u_1={table.mean[k, 1]:.3f} u_last={table.mean[k, -1]:.3f}")
    else:
        spec = _base_spec(args).replace(arrival_rate_high=None)
        grid = args.grid or list(figures.FIG13_RHO)
        limits = parse_retry_limits(args.retry_limit) if args.retry_limit else list(figures.FIG13_RETRY)
        rows = []
        for R in limits:
            s = spec.replace(retry_limit=int(R))
            quiet = sweep_node_load(s, grid, 0.0, args.replications, args.jobs).mean[:, -1]
            loud = sweep_node_load(s, grid, 1.0, args.replications, args.jobs).mean[:, -1]
            for k, rho in enumerate(grid):
                rows.append([int(R), rho, float(quiet[k]), float(loud[k]), float(loud[k] - quiet[k])])
                print(f"R={int(R)} rho={rho:g}: u_last {quiet[k]:.3f} (rho0=0) vs {loud[k]:.3f} (rho0=1)")
        run.write_csv("node_load.csv", ("retry_limit", "rho", "u_last_rho0_0", "u_last_rho0_1", "gap"), rows)
        run.write_text("scenario.txt", format_scenario(spec))
    run.finish()
    return 0


def cmd_simulate(args) -> int:
    spec = _base_spec(args)
    if args.rho0 is not None:
        spec = spec.replace(attacker_rate=load_to_rate(args.rho0, spec))
    stats = run_simulation(spec)
    run = RunDir(_out_dir(args), "simulate", spec.seed, _inputs(args))
    run.write_text("scenario.txt", format_scenario(spec))
    run.write_csv("nodes.csv", NODE_COLUMNS, stats.node_rows())
    run.write_csv("series.csv", SERIES_COLUMNS, stats.series_rows())
    run.finish()
    u = stats.utilizations
    print(f"simulated {spec.duration:g} s, {spec.n_pairs} pairs: u_0={u[0]:.3f} u_1={u[1]:.3f} u_last={u[-1]:.3f}")
    return 0


def cmd_validate(args) -> int:
    config = oracle.OracleConfig(trials=args.trials, seed=args.seed if args.seed is not None else 12345)
    offset = 0.01 if args.inject_fault == "collision" else 0.0
    records = validation.run_all(config, collision_offset=offset)
    counts = validation.summarize(records)
    if args.out:
        run = RunDir(args.out, "validate", config.seed, _inputs(args))
        run.write_csv("validation.csv", ("check", "params", "estimate", "closed_form", "half_width", "status"),
                      [[r.check, r.params, r.estimate, r.closed_form, r.half_width, r.status] for r in records])
        run.finish()
    for r in records:
        if r.status != validation.PASS:
            print(f"{r.status.upper()}: {r.check} {r.params} estimate={r.estimate:.6g} "
                  f"closed_form={r.closed_form:.6g} half_width={r.half_width:.3g}")
    print(f"{counts['pass']} passed, {counts['fail']} failed, {counts['imprecise']} imprecise")
    if counts["imprecise"]:
        print(f"warning: {counts['imprecise']} checks lack precision at {config.trials} trials "
              f"(need >= {oracle.MIN_ADEQUATE_TRIALS})")
    return 1 if counts["fail"] else 0


def cmd_reproduce(args) -> int:
    bundle = figures.reproduce(args.figure, seed=args.seed if args.seed is not None else 1,
                               replications=args.replications, duration=args.duration, jobs=args.jobs)
    run = RunDir(_out_dir(args), "reproduce", args.seed, _inputs(args))
    for name, header, rows in bundle.tables:
        run.write_csv(name, header, rows)
    run.write_json("summary.json", bundle.summary)
    run.finish()
    for c in bundle.summary.get("checks", []):
        print(f"{'PASS' if c['passed'] else 'FAIL'}: {c['check']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wifi-cascade", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", metavar="PATH", help="key = value scenario file")
        sp.add_argument("--out", metavar="DIR", help="output directory (default runs/<command>)")
        sp.add_argument("--seed", type=int, metavar="N")

    sp = sub.add_parser("analyze", help="fixed points, stability and regime of the stylized map")
    common(sp)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--retry-limit", metavar="R[,R...]", help="retry limit(s); 'inf' allowed")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("sweep", help="parameter sweeps written as CSV")
    sp.add_argument("kind", choices=SWEEP_KINDS)
    common(sp)
    sp.add_argument("--grid", type=parse_grid, metavar="LO:HI:STEP")
    sp.add_argument("--retry-limit", metavar="R[,R...]")
    sp.add_argument("--rho", type=float, help="node load for attacker_load sweeps")
    sp.add_argument("--replications", type=int, default=DEFAULT_REPLICATIONS)
    sp.add_argument("--duration", type=float, help="override simulated seconds")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("simulate", help="one simulation run")
    common(sp)
    sp.add_argument("--rho", type=float, help="override node load")
    sp.add_argument("--rho0", type=float, help="override attacker load")
    sp.add_argument("--retry-limit")
    sp.add_argument("--duration", type=float)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("validate", help="oracle and property checks of the closed forms")
    common(sp, scenario=False)
    sp.add_argument("--trials", type=int, default=1_000_000)
    sp.add_argument("--inject-fault", choices=("collision",), help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("reproduce", help="canned figure datasets")
    common(sp, scenario=False)
    sp.add_argument("--figure", required=True, choices=figures.FIGURES)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--duration", type=float)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
