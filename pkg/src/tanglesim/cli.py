"""Command line entry point.

    tanglesim run experiment.cfg --out results --jobs 4
    tanglesim replay --seed 17 experiment.cfg
    tanglesim dot results/trace_0.json > tangle.dot

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .config import ExperimentSpec, parse_config
from .errors import ConfigInvalid
from .experiment import RunResult, plan_runs, run_plans, write_outputs
from .export import export_dot, trace_from_json
from .tsa import cra

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _load_spec(path: str) -> ExperimentSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _progress(quiet: bool, total: int):
    def show(res: RunResult) -> None:
        if quiet:
            return
        s = res.scalars
        line = f"[{res.plan.run + 1}/{total}] point {res.plan.point} seed {res.plan.config.seed}: " \
               f"{s['site_count']} sites, avg tips {s['avg_tip_count']:.2f}"
        if s["attack_success"] is not None:
            line += f", attack {'succeeded' if s['attack_success'] else 'failed'}"
        print(line, file=sys.stderr)
    return show


def cmd_run(args) -> int:
    spec = _load_spec(args.config)
    out = args.out or spec.out_dir
    plans = plan_runs(spec)
    results = run_plans(plans, spec, args.jobs, _progress(args.quiet, len(plans)))
    written = write_outputs(spec, results, out)
    if not args.quiet:
        print(f"wrote {len(written)} files to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_replay(args) -> int:
    """Re-run a single replication (every sweep point) with an explicit seed."""
    spec = _load_spec(args.config)
    spec = replace(spec, sim=replace(spec.sim, seed=args.seed), replications=1, trace=True, dot=True)
    out = args.out or os.path.join(spec.out_dir, f"replay_{args.seed}")
    plans = plan_runs(spec)
    results = run_plans(plans, spec, args.jobs, _progress(args.quiet, len(plans)))
    written = write_outputs(spec, results, out)
    if not args.quiet:
        print(f"wrote {len(written)} files to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_dot(args) -> int:
    try:
        with open(args.trace, encoding="utf-8") as fh:
            trace = trace_from_json(fh.read())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigInvalid(f"cannot load trace {args.trace}: {exc}") from None
    text = export_dot(trace.tangle, cra(trace.tangle))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tanglesim", description="Tangle tip-selection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (file for 'dot')")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common.add_argument("--quiet", action="store_true", help="no progress output")

    p = sub.add_parser("run", parents=[common], help="run every sweep point and replication")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", parents=[common], help="re-run one replication with a given seed")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("config")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("dot", parents=[common], help="render a saved trace as Graphviz DOT")
    p.add_argument("trace")
    p.set_defaults(func=cmd_dot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # anything else is a failure of the run itself
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
