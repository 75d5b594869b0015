"""Tip selection: Uniform, MCMC random walk, and the two-step CRA + TDA.

The two-step algorithm separates a deterministic conflict resolver (``cra``),
which keeps only the heaviest side of every conflict, from a uniform
dispatcher (``tda``) over the resulting conflict-free tip set.  A node keeps
the resolver output as a :class:`TwoStepState` and updates it incrementally
with :func:`apply_own_site` / :func:`apply_incoming_site`.
"""

from __future__ import annotations

import math
import random
from array import array
from dataclasses import dataclass, field
from typing import NamedTuple

from . import kernels
from .errors import EmptyTipSet, NoChildren, ParentsNotInTips, SiteNotInTangle
from .tangle import Site, SiteId, Tangle

MAX_ATTEMPTS = 64
_WALK_CHUNK = 16


@dataclass(frozen=True)
class TsaKind:
    kind: str = "two-step"
    alpha: float = 1.0

    KINDS = ("uniform", "mcmc", "two-step")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown TSA {self.kind!r}; expected one of {self.KINDS}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    @classmethod
    def uniform(cls) -> "TsaKind":
        return cls("uniform")

    @classmethod
    def mcmc(cls, alpha: float) -> "TsaKind":
        return cls("mcmc", float(alpha))

    @classmethod
    def two_step(cls) -> "TsaKind":
        return cls("two-step")

    def __str__(self) -> str:
        return f"mcmc({self.alpha:g})" if self.kind == "mcmc" else self.kind


class ParentPair(NamedTuple):
    p1: SiteId
    p2: SiteId


# -- Uniform and MCMC ----------------------------------------------------------


def _fallback_pair(tangle: Tangle, candidates: list[SiteId]) -> ParentPair:
    for a in candidates:
        for b in candidates:
            if b >= a and not tangle.induced_conflicts(a, b):
                return ParentPair(a, b)
    raise AssertionError("a tip paired with itself is always conflict-free")


def uniform_select(tangle: Tangle, rng: random.Random) -> ParentPair:
    """Two independent uniform draws over the raw tips, redrawn on conflict."""
    tips = tangle.raw_tips()
    if len(tips) == 1:
        return ParentPair(tips[0], tips[0])
    for _ in range(MAX_ATTEMPTS):
        a, b = rng.choice(tips), rng.choice(tips)
        if not tangle.induced_conflicts(a, b):
            return ParentPair(a, b)
    return _fallback_pair(tangle, tips)


def mcmc_transition(tangle: Tangle, current: SiteId, alpha: float) -> dict[SiteId, float]:
    """Probability of stepping from ``current`` to each of its children.

    P(current -> y) is proportional to exp(-alpha * (w(current) - w(y))); the
    exponent is shifted by the heaviest child, which cancels on normalisation.
    """
    kids = tangle.children_of(current)
    if not kids:
        raise NoChildren(current)
    ws = [tangle.cumulative_weight(k) for k in kids]
    wmax = max(ws)
    terms = [math.exp(-alpha * (wmax - w)) for w in ws]
    total = math.fsum(terms)
    return {k: t / total for k, t in zip(kids, terms)}


def random_walk(tangle: Tangle, alpha: float, rng: random.Random, start: SiteId | None = None) -> SiteId:
    cur = tangle.index(start if start is not None else tangle.genesis)
    while True:
        buf = array("d", [rng.random() for _ in range(_WALK_CHUNK)])
        cur, _, done = kernels.mcmc_walk(tangle, cur, alpha, buf)
        if done:
            return tangle.id_at(cur)


def mcmc_select(tangle: Tangle, alpha: float, rng: random.Random) -> ParentPair:
    for _ in range(MAX_ATTEMPTS):
        a = random_walk(tangle, alpha, rng)
        b = random_walk(tangle, alpha, rng)
        if not tangle.induced_conflicts(a, b):
            return ParentPair(a, b)
    return _fallback_pair(tangle, tangle.raw_tips())


# -- two-step TSA ------------------------------------------------------------


def _beats(w1: int, id1: SiteId, w2: int, id2: SiteId) -> bool:
    """Heavier wins; equal weights go to the smaller id."""
    return w1 > w2 or (w1 == w2 and id1 < id2)


@dataclass
class ConflictRecord:
    key: str
    members: list[SiteId]
    winner: SiteId
    cached_weights: dict[SiteId, int] = field(default_factory=dict)

    @property
    def losers(self) -> list[SiteId]:
        return [m for m in self.members if m != self.winner]


class TwoStepState:
    """Output of the conflict resolver, kept up to date by one node."""

    def __init__(self, tangle: Tangle):
        self.tangle = tangle
        self.conflicts: dict[str, ConflictRecord] = {}
        self._losers: dict[int, str] = {}
        self._loser_mask = 0
        self._discarded: set[int] = set()
        self._tips: set[int] = set()
        self.full_runs = 0

    # views
    @property
    def winners(self) -> dict[str, SiteId]:
        return {k: r.winner for k, r in sorted(self.conflicts.items())}

    @property
    def discarded(self) -> frozenset[SiteId]:
        return frozenset(self.tangle.id_at(i) for i in self._discarded)

    @property
    def tips(self) -> tuple[SiteId, ...]:
        return tuple(sorted(self.tangle.id_at(i) for i in self._tips))

    def is_discarded(self, site_id: SiteId) -> bool:
        return self.tangle.index(site_id) in self._discarded

    def snapshot(self) -> tuple[dict[str, SiteId], frozenset[SiteId], tuple[SiteId, ...]]:
        return self.winners, self.discarded, self.tips

    def __repr__(self) -> str:
        return f"TwoStepState(winners={self.winners}, discarded={sorted(self.discarded)}, tips={self.tips})"

    # resolution
    def resolve(self) -> "TwoStepState":
        """Recompute everything from the tangle (the batch CRA)."""
        t = self.tangle
        self.full_runs += 1
        self.conflicts = {}
        self._losers = {}
        mask = 0
        for key in t.conflict_keys():
            idxs = [t.index(m) for m in t.members(key)]
            ranked = sorted(idxs, key=lambda i: (-t.weight_at(i), t.id_at(i)))
            self.conflicts[key] = ConflictRecord(
                key,
                [t.id_at(i) for i in ranked],
                t.id_at(ranked[0]),
                {t.id_at(i): t.weight_at(i) for i in ranked},
            )
            for i in ranked[1:]:
                self._losers[i] = key
                mask |= 1 << i
        self._loser_mask = mask
        n = len(t)
        if mask:
            discarded = {i for i in range(n) if t.past_bits(i) & mask}
        else:
            discarded = set()
        self._discarded = discarded
        children = t._children
        self._tips = {
            i for i in range(n)
            if i not in discarded and all(c in discarded for c in children[i])
        }
        return self

    def own_site(self, site: Site, chosen: ParentPair) -> "TwoStepState":
        t = self.tangle
        try:
            parents = {t.index(p) for p in chosen}
        except KeyError:
            raise ParentsNotInTips(chosen) from None
        if not parents <= self._tips:
            raise ParentsNotInTips(chosen)
        self._tips -= parents
        self._tips.add(t.index(site.id))
        return self

    def incoming_site(self, site: Site) -> "TwoStepState":
        t = self.tangle
        if site.id not in t:
            raise SiteNotInTangle(site.id)
        idx = t.index(site.id)
        if site.label is not None and len(t.members(site.label.key)) >= 2:
            return self.resolve()
        past = t.past_bits(idx)
        if past & self._loser_mask:
            self._discarded.add(idx)
            for m, key in self._losers.items():
                if not (past >> m) & 1:
                    continue
                rec = self.conflicts[key]
                m_id = t.id_at(m)
                rec.cached_weights[m_id] += 1
                c_id = rec.winner
                if _beats(rec.cached_weights[m_id], m_id, rec.cached_weights[c_id], c_id):
                    rec.cached_weights[c_id] = t.cumulative_weight(c_id)
                    if _beats(rec.cached_weights[m_id], m_id, rec.cached_weights[c_id], c_id):
                        return self.resolve()
            return self
        confirmed = {i for i in self._tips if (past >> i) & 1}
        self._tips -= confirmed
        self._tips.add(idx)
        return self


def cra(tangle: Tangle) -> TwoStepState:
    return TwoStepState(tangle).resolve()


def tda(state: TwoStepState, rng: random.Random) -> ParentPair:
    """Uniform pair of distinct tips from the conflict-free set (same tip twice if alone)."""
    tips = state.tips
    m = len(tips)
    if m == 0:
        raise EmptyTipSet()
    if m == 1:
        return ParentPair(tips[0], tips[0])
    i = rng.randrange(m)
    j = rng.randrange(m - 1)
    if j >= i:
        j += 1
    return ParentPair(tips[i], tips[j])


def apply_own_site(state: TwoStepState, site: Site, chosen: ParentPair) -> TwoStepState:
    return state.own_site(site, chosen)


def apply_incoming_site(state: TwoStepState, tangle: Tangle, site: Site) -> TwoStepState:
    if tangle is not state.tangle:
        raise ValueError("state was built on a different tangle")
    return state.incoming_site(site)


def select(kind: TsaKind, tangle: Tangle, rng: random.Random, state: TwoStepState | None = None) -> ParentPair:
    if kind.kind == "uniform":
        return uniform_select(tangle, rng)
    if kind.kind == "mcmc":
        return mcmc_select(tangle, kind.alpha, rng)
    if state is None:
        state = cra(tangle)
    return tda(state, rng)
