"""Byte-stable serializations: Graphviz DOT for tangles, JSON for traces."""

from __future__ import annotations

import json
from dataclasses import asdict

from .sim import AttackConfig, SimConfig, SimTrace, TraceEvent
from .tangle import Site, SpendLabel, Tangle
from .tsa import TsaKind, TwoStepState


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(tangle: Tangle, state: TwoStepState | None = None) -> str:
    """DOT digraph with edges child -> parent.

    With ``state``, discarded sites are dashed and tip-set members are drawn
    as double circles.  Lines are sorted by site id.
    """
    discarded = state.discarded if state is not None else frozenset()
    tips = set(state.tips) if state is not None else set()
    lines = ["digraph tangle {", "  rankdir=RL;", "  node [shape=circle];"]
    for sid in sorted(s.id for s in tangle):
        attrs = [f"label={_quote(f'{sid} w={tangle.cumulative_weight(sid)}')}"]
        if sid in discarded:
            attrs.append("style=dashed")
        if sid in tips:
            attrs.append("shape=doublecircle")
        lines.append(f"  {_quote(sid)} [{', '.join(attrs)}];")
    edges = sorted((s.id, p) for s in tangle for p in tangle.parents_of(s.id))
    lines += [f"  {_quote(c)} -> {_quote(p)};" for c, p in edges]
    lines.append("}")
    return "\n".join(lines) + "\n"


def config_to_dict(config: SimConfig) -> dict:
    return {
        "rate": config.rate,
        "latency": config.latency,
        "duration": config.duration,
        "tsa": config.tsa.kind,
        "alpha": config.tsa.alpha,
        "seed": config.seed,
        "nodes": config.nodes,
        "attack": None if config.attack is None else asdict(config.attack),
    }


def config_from_dict(data: dict) -> SimConfig:
    attack = data.get("attack")
    return SimConfig(
        rate=data["rate"],
        latency=data["latency"],
        duration=data["duration"],
        tsa=TsaKind(data["tsa"], data["alpha"]),
        seed=data["seed"],
        nodes=data["nodes"],
        attack=None if attack is None else AttackConfig(**attack),
    )


def trace_to_json(trace: SimTrace) -> str:
    t = trace.tangle
    sites = []
    for site in t:
        label = None if site.label is None else [site.label.key, site.label.branch]
        sites.append([site.id, list(site.parents), site.issuer, site.issue_time, t.arrival_time(site.id), label])
    doc = {
        "config": config_to_dict(trace.config),
        "end_time": trace.end_time,
        "reveal_time": trace.reveal_time,
        "evaluate_time": trace.evaluate_time,
        "attack_success": trace.attack_success,
        "parasite_overtook": trace.parasite_overtook,
        "sites": sites,
        "events": [list(e) for e in trace.events],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def trace_from_json(text: str) -> SimTrace:
    doc = json.loads(text)
    tangle = Tangle()
    for sid, parents, issuer, issue_time, arrival, label in doc["sites"]:
        lab = None if label is None else SpendLabel(*label)
        tangle.add_site(Site(sid, tuple(parents), issuer, issue_time, lab), arrival)
    return SimTrace(
        config=config_from_dict(doc["config"]),
        tangle=tangle,
        events=[TraceEvent(*e) for e in doc["events"]],
        end_time=doc["end_time"],
        reveal_time=doc["reveal_time"],
        evaluate_time=doc["evaluate_time"],
        attack_success=doc["attack_success"],
        parasite_overtook=doc["parasite_overtook"],
    )
