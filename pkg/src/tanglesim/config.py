"""Experiment configuration: a small line-oriented ``key = value`` format.

Example::

    [sim]
    rate = 5
    tsa = mcmc
    alpha = 0.5

    [attack]
    rate = 2.5
    accept_weight = 8

    [sweep]
    replications = 20
    attack.accept_weight = 1, 2, 4, 8

    [output]
    dir = results
    dot = true

The presence of an ``[attack]`` section (even empty) enables the attack.
Lines starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable

from .errors import ConfigInvalid, ParseError, RangeError, TypeMismatch, UnknownKey
from .sim import ANCHOR_POLICIES, AttackConfig, SimConfig
from .tsa import TsaKind


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(text)


def _optional_float(text: str) -> float | None:
    return None if text.lower() == "none" else float(text)


def _choice(options: tuple[str, ...]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(text)
        return text
    parse.__name__ = "one of " + "/".join(options)
    return parse


def _positive(v) -> bool:
    return v > 0


def _non_negative(v) -> bool:
    return v is None or v >= 0


def _at_least_one(v) -> bool:
    return v >= 1


_ANY = lambda v: True  # noqa: E731


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], Any]
    check: Callable[[Any], bool] = _ANY
    rule: str = ""


_SIM_KEYS = {
    "rate": _Key(float, _positive, "> 0"),
    "latency": _Key(float, _non_negative, ">= 0"),
    "duration": _Key(float, _positive, "> 0"),
    "tsa": _Key(_choice(TsaKind.KINDS)),
    "alpha": _Key(float, _non_negative, ">= 0"),
    "seed": _Key(int),
    "nodes": _Key(int, _at_least_one, ">= 1"),
}

_ATTACK_KEYS = {
    "rate": _Key(float, _non_negative, ">= 0"),
    "accept_weight": _Key(int, _at_least_one, ">= 1"),
    "anchor": _Key(_choice(ANCHOR_POLICIES)),
    "eval_horizon": _Key(float, _non_negative, ">= 0"),
    "reveal_time": _Key(_optional_float, _non_negative, ">= 0"),
    "stop_on_evaluate": _Key(_bool),
}

_OUTPUT_KEYS = {
    "dir": _Key(str),
    "trace": _Key(_bool),
    "dot": _Key(_bool),
    "csv": _Key(_bool),
    "json": _Key(_bool),
    "sample_interval": _Key(float, _positive, "> 0"),
    "cooldown": _Key(float, _non_negative, ">= 0"),
    "confirm_weight": _Key(int, _at_least_one, ">= 1"),
}

SECTIONS = ("sim", "attack", "sweep", "output")


@dataclass(frozen=True)
class ExperimentSpec:
    sim: SimConfig = field(default_factory=SimConfig)
    sweep: tuple[tuple[str, tuple], ...] = ()
    replications: int = 1
    out_dir: str = "results"
    trace: bool = False
    dot: bool = False
    csv: bool = True
    json: bool = True
    sample_interval: float = 1.0
    cooldown: float = 20.0
    confirm_weight: int = 10

    def points(self) -> list[tuple[dict[str, Any], SimConfig]]:
        """Cartesian product of the sweep axes, first axis varying slowest."""
        combos: list[dict[str, Any]] = [{}]
        for name, values in self.sweep:
            combos = [dict(c, **{name: v}) for c in combos for v in values]
        return [(c, apply_axes(self.sim, c)) for c in combos]


def apply_axes(config: SimConfig, assignment: dict[str, Any]) -> SimConfig:
    for name, value in assignment.items():
        section, key = name.split(".", 1)
        if section == "attack":
            config = replace(config, attack=replace(config.attack, **{key: value}))
        elif key == "tsa":
            config = replace(config, tsa=TsaKind(value, config.tsa.alpha))
        elif key == "alpha":
            config = replace(config, tsa=TsaKind(config.tsa.kind, value))
        else:
            config = replace(config, **{key: value})
    return config


def _convert(spec: _Key, name: str, text: str, lineno: int) -> Any:
    try:
        value = spec.parse(text)
    except ValueError:
        kind = getattr(spec.parse, "__name__", "value")
        raise TypeMismatch(f"{name}: cannot read {text!r} as {kind}", lineno) from None
    if not spec.check(value):
        raise RangeError(f"{name}: {text} is out of range (must be {spec.rule})", lineno)
    return value


def _axis_key(name: str, lineno: int) -> _Key:
    if "." not in name:
        raise UnknownKey(f"sweep axis {name!r} must be written section.key", lineno)
    section, key = name.split(".", 1)
    table = {"sim": _SIM_KEYS, "attack": _ATTACK_KEYS}.get(section)
    if table is None or key not in table:
        raise UnknownKey(f"unknown sweep axis {name!r}", lineno)
    if name == "sim.seed":
        raise UnknownKey("seeds are set by replications, not swept", lineno)
    return table[key]


def parse_config(text: str) -> ExperimentSpec:
    values: dict[str, dict[str, Any]] = {s: {} for s in SECTIONS}
    seen_sections: set[str] = set()
    axes: list[tuple[str, tuple]] = []
    axis_lines: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise UnknownKey(f"unknown section [{section}]", lineno)
            if section in seen_sections:
                raise ParseError(f"section [{section}] appears twice", lineno)
            seen_sections.add(section)
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ParseError("key outside of any section", lineno)
        key, _, val = (part.strip() for part in line.partition("="))
        if not key:
            raise ParseError("empty key", lineno)
        if key in values[section] or key in axis_lines:
            raise ParseError(f"duplicate key {key!r}", lineno)

        if section == "sweep" and key != "replications":
            spec = _axis_key(key, lineno)
            items = [v.strip() for v in val.split(",")]
            if not val or any(not v for v in items):
                raise ParseError(f"{key}: expected a comma-separated list", lineno)
            axes.append((key, tuple(_convert(spec, key, v, lineno) for v in items)))
            axis_lines[key] = lineno
            continue
        table = {
            "sim": _SIM_KEYS,
            "attack": _ATTACK_KEYS,
            "sweep": {"replications": _Key(int, _at_least_one, ">= 1")},
            "output": _OUTPUT_KEYS,
        }[section]
        if key not in table:
            raise UnknownKey(f"unknown key {key!r} in [{section}]", lineno)
        values[section][key] = _convert(table[key], key, val, lineno)

    sim = dict(values["sim"])
    tsa = TsaKind(sim.pop("tsa", "two-step"), sim.pop("alpha", 1.0))
    attack = AttackConfig(**values["attack"]) if "attack" in seen_sections else None
    for name, lineno in axis_lines.items():
        if name.startswith("attack.") and attack is None:
            raise ConfigInvalid(f"line {lineno}: {name} swept without an [attack] section")
    config = SimConfig(tsa=tsa, attack=attack, **sim)
    config.validate()
    out = {("out_dir" if k == "dir" else k): v for k, v in values["output"].items()}
    spec = ExperimentSpec(
        sim=config,
        sweep=tuple(axes),
        replications=values["sweep"].get("replications", 1),
        **out,
    )
    for _, point in spec.points():
        point.validate()
    return spec


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(spec: ExperimentSpec) -> str:
    """Canonical text form; ``parse_config(render(s)) == s``."""
    sim = spec.sim
    lines = [
        "[sim]",
        f"rate = {_fmt(sim.rate)}",
        f"latency = {_fmt(sim.latency)}",
        f"duration = {_fmt(sim.duration)}",
        f"tsa = {sim.tsa.kind}",
        f"alpha = {_fmt(sim.tsa.alpha)}",
        f"seed = {sim.seed}",
        f"nodes = {sim.nodes}",
    ]
    if sim.attack is not None:
        lines += ["", "[attack]"]
        lines += [f"{f.name} = {_fmt(getattr(sim.attack, f.name))}" for f in fields(AttackConfig)]
    lines += ["", "[sweep]", f"replications = {spec.replications}"]
    lines += [f"{name} = {', '.join(_fmt(v) for v in vals)}" for name, vals in spec.sweep]
    lines += [
        "",
        "[output]",
        f"dir = {spec.out_dir}",
        f"trace = {_fmt(spec.trace)}",
        f"dot = {_fmt(spec.dot)}",
        f"csv = {_fmt(spec.csv)}",
        f"json = {_fmt(spec.json)}",
        f"sample_interval = {_fmt(spec.sample_interval)}",
        f"cooldown = {_fmt(spec.cooldown)}",
        f"confirm_weight = {spec.confirm_weight}",
    ]
    return "\n".join(lines) + "\n"
