"""Sweep runner: one simulation per (sweep point, replication), flat CSV out."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable

from .config import ExperimentSpec
from .export import export_dot, trace_to_json
from .metrics import MetricsReport, report, summarize
from .sim import AttackConfig, SimConfig, run
from .tsa import TsaKind, cra

RUN_COLUMNS = ("run", "point", "replication")
CONFIG_COLUMNS = (
    "seed",
    "rate",
    "latency",
    "duration",
    "tsa",
    "alpha",
    "nodes",
    "attack",
    "attack_rate",
    "accept_weight",
    "anchor",
    "eval_horizon",
    "attack_reveal_time",
    "stop_on_evaluate",
)
COLUMNS = RUN_COLUMNS + CONFIG_COLUMNS + MetricsReport.SCALARS
assert len(set(COLUMNS)) == len(COLUMNS)


@dataclass(frozen=True)
class RunPlan:
    run: int
    point: int
    replication: int
    config: SimConfig


@dataclass
class RunResult:
    plan: RunPlan
    row: dict[str, str]
    scalars: dict[str, Any]
    dot: str | None = None
    trace: str | None = None


def plan_runs(spec: ExperimentSpec) -> list[RunPlan]:
    plans = []
    for p, (_, config) in enumerate(spec.points()):
        for r in range(spec.replications):
            plans.append(RunPlan(len(plans), p, r, replace(config, seed=spec.sim.seed + r)))
    return plans


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_row(config: SimConfig) -> dict[str, str]:
    a = config.attack
    values = {
        "seed": config.seed,
        "rate": config.rate,
        "latency": config.latency,
        "duration": config.duration,
        "tsa": config.tsa.kind,
        "alpha": config.tsa.alpha,
        "nodes": config.nodes,
        "attack": a is not None,
        "attack_rate": None if a is None else a.rate,
        "accept_weight": None if a is None else a.accept_weight,
        "anchor": None if a is None else a.anchor,
        "eval_horizon": None if a is None else a.eval_horizon,
        "attack_reveal_time": None if a is None else a.reveal_time,
        "stop_on_evaluate": None if a is None else a.stop_on_evaluate,
    }
    return {k: _cell(v) for k, v in values.items()}


def row_to_config(row: dict[str, str]) -> SimConfig:
    """Rebuild the exact configuration that produced a results.csv row."""
    attack = None
    if row["attack"] == "true":
        attack = AttackConfig(
            rate=float(row["attack_rate"]),
            accept_weight=int(row["accept_weight"]),
            anchor=row["anchor"],
            eval_horizon=float(row["eval_horizon"]),
            reveal_time=float(row["attack_reveal_time"]) if row["attack_reveal_time"] else None,
            stop_on_evaluate=row["stop_on_evaluate"] == "true",
        )
    return SimConfig(
        rate=float(row["rate"]),
        latency=float(row["latency"]),
        duration=float(row["duration"]),
        tsa=TsaKind(row["tsa"], float(row["alpha"])),
        seed=int(row["seed"]),
        nodes=int(row["nodes"]),
        attack=attack,
    )


def execute(plan: RunPlan, spec: ExperimentSpec) -> RunResult:
    trace = run(plan.config)
    rep = report(trace, spec.sample_interval, spec.cooldown, spec.confirm_weight)
    scalars = rep.scalars()
    row = {"run": str(plan.run), "point": str(plan.point), "replication": str(plan.replication)}
    row.update(config_row(plan.config))
    row.update({k: _cell(v) for k, v in scalars.items()})
    result = RunResult(plan, row, scalars)
    if spec.dot:
        result.dot = export_dot(trace.tangle, cra(trace.tangle))
    if spec.trace:
        result.trace = trace_to_json(trace)
    return result


def _execute_packed(args: tuple[RunPlan, ExperimentSpec]) -> RunResult:
    return execute(*args)


def run_plans(
    plans: list[RunPlan],
    spec: ExperimentSpec,
    jobs: int = 1,
    progress: Callable[[RunResult], None] | None = None,
) -> list[RunResult]:
    """Results come back in plan order whatever the completion order."""
    if jobs > 1 and len(plans) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = []
            for res in pool.map(_execute_packed, [(p, spec) for p in plans]):
                results.append(res)
                if progress:
                    progress(res)
            return results
    results = []
    for p in plans:
        res = execute(p, spec)
        results.append(res)
        if progress:
            progress(res)
    return results


def results_csv(results: list[RunResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        writer.writerow(res.row)
    return buf.getvalue()


def summary_json(spec: ExperimentSpec, results: list[RunResult]) -> str:
    points = []
    for p, (assignment, _) in enumerate(spec.points()):
        reports = [r for r in results if r.plan.point == p]
        if not reports:
            continue
        agg = summarize(r.scalars for r in reports)
        points.append({"point": p, "params": assignment, "metrics": agg})
    return json.dumps({"points": points}, sort_keys=True, indent=2) + "\n"


def write_outputs(spec: ExperimentSpec, results: list[RunResult], out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def put(name: str, text: str) -> None:
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)

    if spec.csv:
        put("results.csv", results_csv(results))
    if spec.json:
        put("summary.json", summary_json(spec, results))
    for res in results:
        if res.dot is not None:
            put(f"tangle_{res.plan.run}.dot", res.dot)
        if res.trace is not None:
            put(f"trace_{res.plan.run}.json", res.trace)
    return written


def run_experiment(
    spec: ExperimentSpec,
    out_dir: str | None = None,
    jobs: int = 1,
    progress: Callable[[RunResult], None] | None = None,
) -> list[RunResult]:
    results = run_plans(plan_runs(spec), spec, jobs, progress)
    write_outputs(spec, results, out_dir or spec.out_dir)
    return results
