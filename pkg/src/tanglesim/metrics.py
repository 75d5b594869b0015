"""Stability and security measurements computed from simulation traces."""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import NoAttackConfigured
from .sim import ADVERSARY, TX_B, SimConfig, SimTrace, run
from .tsa import cra


@dataclass
class MetricsReport:
    avg_tip_count: float
    tip_count_series: list[tuple[float, int]]
    avg_tip_set_size: float
    tip_set_series: list[tuple[float, int]]
    mean_approval_time: float | None
    approval_times: list[float]
    mean_weight_confirmation_time: float | None
    left_behind_count: int
    discarded_count: int
    site_count: int
    parasite_attachment_fraction: float | None = None
    attack_success: bool | None = None
    reveal_time: float | None = None
    parasite_overtook: bool | None = None
    settings: dict = field(default_factory=dict)

    SCALARS = (
        "site_count",
        "avg_tip_count",
        "avg_tip_set_size",
        "mean_approval_time",
        "mean_weight_confirmation_time",
        "left_behind_count",
        "discarded_count",
        "parasite_attachment_fraction",
        "attack_success",
        "reveal_time",
        "parasite_overtook",
    )

    def scalars(self) -> dict:
        return {name: getattr(self, name) for name in self.SCALARS}


def tip_stats(trace: SimTrace, sample_interval: float = 1.0) -> tuple[list[tuple[float, int]], float]:
    """Raw-tip count of the public tangle sampled every ``sample_interval``.

    The average skips the first half of the run (warm-up from a lone genesis).
    """
    if sample_interval <= 0:
        raise ValueError("sample_interval must be > 0")
    t = trace.tangle
    starts = []
    ends = []
    for i in range(len(t)):
        starts.append(t._arrival[i])
        kids = t._children[i]
        if kids:
            ends.append(min(t._arrival[c] for c in kids))
    starts_a = np.sort(np.asarray(starts))
    ends_a = np.sort(np.asarray(ends, dtype=float))
    count = int(math.floor(trace.end_time / sample_interval + 1e-9)) + 1
    times = np.arange(count) * sample_interval
    alive = np.searchsorted(starts_a, times, side="right") - np.searchsorted(ends_a, times, side="right")
    series = [(float(x), int(c)) for x, c in zip(times, alive)]
    tail = [c for x, c in series if x >= trace.end_time / 2]
    return series, (sum(tail) / len(tail) if tail else float(series[-1][1]))


def tip_set_stats(trace: SimTrace, sample_interval: float = 1.0) -> tuple[list[tuple[float, int]], float]:
    """Like :func:`tip_stats` but counts the conflict-aware tip set |C| of the
    public tangle at each sample time.  Equal to the raw count without conflicts."""
    if sample_interval <= 0:
        raise ValueError("sample_interval must be > 0")
    t = trace.tangle
    n = len(t)
    count = int(math.floor(trace.end_time / sample_interval + 1e-9)) + 1
    labeled = [i for i in range(n) if t.site_at(i).label is not None]
    weight = {m: 0 for m in labeled}
    disc = [False] * n
    live_kids = [0] * n
    mask = 0
    size = 0
    added = 0

    def loser_mask() -> int:
        best: dict[str, int] = {}
        present = [m for m in labeled if m < added]
        for m in present:
            key = t.site_at(m).label.key
            b = best.get(key)
            if b is None or (weight[m], t.id_at(b)) > (weight[b], t.id_at(m)):
                best[key] = m
        keys = {}
        for m in present:
            keys.setdefault(t.site_at(m).label.key, []).append(m)
        out = 0
        for key, ms in keys.items():
            if len(ms) >= 2:
                for m in ms:
                    if m != best[key]:
                        out |= 1 << m
        return out

    def rebuild() -> int:
        for i in range(added):
            disc[i] = bool(t.past_bits(i) & mask)
            live_kids[i] = 0
        for i in range(added):
            if not disc[i]:
                for p in t._parents[i]:
                    live_kids[p] += 1
        return sum(1 for i in range(added) if not disc[i] and live_kids[i] == 0)

    series = []
    for k in range(count):
        now = k * sample_interval
        grew = False
        while added < n and t._arrival[added] <= now:
            j = added
            added += 1
            past = t.past_bits(j)
            for m in labeled:
                if m < j and (past >> m) & 1:
                    weight[m] += 1
            if j in weight:
                weight[j] = 1
            grew = True
            disc[j] = bool(past & mask)
            live_kids[j] = 0
            if not disc[j]:
                size += 1
                for p in t._parents[j]:
                    if live_kids[p] == 0 and not disc[p]:
                        size -= 1
                    live_kids[p] += 1
        if grew and labeled:
            new_mask = loser_mask()
            if new_mask != mask:
                mask = new_mask
                size = rebuild()
        series.append((float(now), size))
    tail = [c for x, c in series if x >= trace.end_time / 2]
    return series, (sum(tail) / len(tail) if tail else float(series[-1][1]))


def approval_times(trace: SimTrace) -> tuple[float | None, list[float]]:
    """Delay between a site's issuance and its first child's issuance."""
    t = trace.tangle
    out = []
    for i, site in enumerate(t):
        kids = t._children[i]
        if kids:
            out.append(min(t.site_at(c).issue_time for c in kids) - site.issue_time)
    return (statistics.fmean(out) if out else None), out


def weight_confirmation_times(trace: SimTrace, threshold: int) -> tuple[float | None, list[float]]:
    """Delay until a site's cumulative weight in the public tangle reaches ``threshold``."""
    t = trace.tangle
    n = len(t)
    reached = np.full(n, np.nan)
    if threshold <= 1:
        reached[:] = t._arrival[:n]
    else:
        counts = np.zeros(n, dtype=np.int64)
        for j in range(1, n):
            strict = t.past_bits(j) ^ (1 << j)
            raw = np.frombuffer(strict.to_bytes((j + 7) // 8, "little"), dtype=np.uint8)
            bits = np.unpackbits(raw, bitorder="little")[:j]
            counts[:j] += bits
            hit = (counts[:j] == threshold - 1) & (bits == 1)
            reached[:j][hit] = t._arrival[j]
    out = [float(reached[i]) - t.site_at(i).issue_time for i in range(n) if not math.isnan(reached[i])]
    return (statistics.fmean(out) if out else None), out


def left_behind(trace: SimTrace, cooldown: float) -> int:
    """Raw tips older than ``cooldown`` at the end, not counting CRA-discarded sites."""
    t = trace.tangle
    discarded = cra(t)._discarded
    return sum(
        1
        for i in t.tip_indices()
        if i not in discarded and trace.end_time - t.site_at(i).issue_time > cooldown
    )


def parasite_attachment(trace: SimTrace) -> float:
    """Fraction of honest sites issued after the reveal whose past cone holds tx_B."""
    if trace.config.attack is None:
        raise NoAttackConfigured()
    if trace.reveal_time is None:
        return 0.0
    t = trace.tangle
    b = t.index(TX_B)
    total = attached = 0
    for i, site in enumerate(t):
        if site.issuer in ("", ADVERSARY) or site.issue_time < trace.reveal_time:
            continue
        total += 1
        attached += (t.past_bits(i) >> b) & 1
    return attached / total if total else 0.0


def report(trace: SimTrace, sample_interval: float = 1.0, cooldown: float = 20.0, confirm_weight: int = 10) -> MetricsReport:
    series, avg = tip_stats(trace, sample_interval)
    c_series, c_avg = tip_set_stats(trace, sample_interval)
    mean_approval, approvals = approval_times(trace)
    mean_confirm, _ = weight_confirmation_times(trace, confirm_weight)
    attacked = trace.config.attack is not None
    return MetricsReport(
        avg_tip_count=avg,
        tip_count_series=series,
        avg_tip_set_size=c_avg,
        tip_set_series=c_series,
        mean_approval_time=mean_approval,
        approval_times=approvals,
        mean_weight_confirmation_time=mean_confirm,
        left_behind_count=left_behind(trace, cooldown),
        discarded_count=len(cra(trace.tangle)._discarded),
        site_count=len(trace.tangle),
        parasite_attachment_fraction=parasite_attachment(trace) if attacked else None,
        attack_success=trace.attack_success,
        reveal_time=trace.reveal_time,
        parasite_overtook=trace.parasite_overtook if attacked else None,
        settings={"sample_interval": sample_interval, "cooldown": cooldown, "confirm_weight": confirm_weight},
    )


def mean_stderr(values: Sequence[float]) -> tuple[float | None, float | None]:
    vals = [float(v) for v in values if v is not None]
    if not vals:
        return None, None
    if len(vals) == 1:
        return vals[0], 0.0
    return statistics.fmean(vals), statistics.stdev(vals) / math.sqrt(len(vals))


def summarize(reports: Iterable[MetricsReport | dict]) -> dict:
    """Mean and standard error of every scalar metric across replications.

    Accepts reports or their ``scalars()`` dicts.
    """
    rows = [r if isinstance(r, dict) else r.scalars() for r in reports]
    out = {"runs": len(rows)}
    for name in MetricsReport.SCALARS:
        mean, se = mean_stderr([r[name] for r in rows])
        out[name] = {"mean": mean, "stderr": se}
    return out


def _attack_succeeds(config: SimConfig) -> bool:
    return bool(run(config).attack_success)


def success_curve(
    base: SimConfig,
    thresholds: Iterable[int],
    replications: int,
    jobs: int = 1,
) -> list[dict]:
    """Attack success rate per acceptance threshold; replication i uses seed base.seed + i."""
    if base.attack is None:
        raise NoAttackConfigured()
    rows = []
    for w in thresholds:
        attack = replace(base.attack, accept_weight=int(w), stop_on_evaluate=True)
        configs = [replace(base, attack=attack, seed=base.seed + i) for i in range(replications)]
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as pool:
                wins = list(pool.map(_attack_succeeds, configs))
        else:
            wins = [_attack_succeeds(c) for c in configs]
        p = sum(wins) / replications
        rows.append({
            "accept_weight": int(w),
            "success_rate": p,
            "stderr": math.sqrt(p * (1 - p) / replications),
            "runs": replications,
        })
    return rows

