"""Independent brute-force oracles and random generators shared by the tests.

Nothing here uses the bitsets or weight arrays kept by ``Tangle``; everything
is recomputed from parent lists.
"""

from __future__ import annotations

import random
from collections import deque

from tanglesim.errors import TangleError
from tanglesim.tangle import Site, SpendLabel, Tangle, genesis
from tanglesim.tsa import ParentPair, TwoStepState, cra, tda


def parent_map(tangle: Tangle) -> dict[str, tuple[str, ...]]:
    return {s.id: tuple(s.parents) for s in tangle}


def ancestors(parents: dict[str, tuple[str, ...]], sid: str) -> set[str]:
    """Strict ancestors by breadth-first search over parent edges."""
    seen: set[str] = set()
    queue = deque(parents[sid])
    while queue:
        p = queue.popleft()
        if p not in seen:
            seen.add(p)
            queue.extend(parents[p])
    return seen


def descendants(tangle: Tangle) -> dict[str, set[str]]:
    parents = parent_map(tangle)
    out = {sid: set() for sid in parents}
    for sid in parents:
        for a in ancestors(parents, sid):
            out[a].add(sid)
    return out


def brute_weights(tangle: Tangle) -> dict[str, int]:
    return {sid: 1 + len(d) for sid, d in descendants(tangle).items()}


def brute_induced_conflict(tangle: Tangle, a: str, b: str) -> bool:
    parents = parent_map(tangle)
    cone_a = ancestors(parents, a) | {a}
    cone_b = ancestors(parents, b) | {b}
    for x in cone_a:
        lx = tangle.site(x).label
        for y in cone_b:
            ly = tangle.site(y).label
            if lx and ly and x != y and lx.key == ly.key and lx.branch != ly.branch:
                return True
    return False


def heaviest_wins(tangle: Tangle, tips) -> bool:
    """For every directly conflicting pair (s1, s2) with s1 in the past cone of
    a member of ``tips``, w(s1) >= w(s2) under true weights."""
    weights = brute_weights(tangle)
    parents = parent_map(tangle)
    covered = set()
    for t in tips:
        covered |= ancestors(parents, t) | {t}
    for key in tangle.conflict_keys():
        members = tangle.members(key)
        for s1 in members:
            if s1 not in covered:
                continue
            for s2 in members:
                if s2 != s1 and weights[s1] < weights[s2]:
                    return False
    return True


def _pick_recent(rng: random.Random, ids: list[str]) -> str:
    if rng.random() < 0.8:
        return ids[max(0, len(ids) - 1 - int(rng.expovariate(0.2)))]
    return rng.choice(ids)


def random_tangle(rng: random.Random, max_sites: int = 64, keys: int = 3, p_label: float = 0.15) -> Tangle:
    """Random valid tangle; parents lean towards recent sites so the DAG is deep."""
    t = Tangle([genesis("s000")])
    n = rng.randint(1, max_sites)
    for i in range(1, n):
        ids = [s.id for s in t]
        label = None
        if keys and rng.random() < p_label:
            label = SpendLabel(f"k{rng.randrange(keys)}", rng.choice("ABC"))
        for attempt in range(20):
            site = Site(f"s{i:03d}", (_pick_recent(rng, ids), _pick_recent(rng, ids)), label=label)
            try:
                t.add_site(site)
                break
            except TangleError:
                if attempt % 2:
                    label = None
    return t


def random_unlabeled_tangle(rng: random.Random, max_sites: int = 200) -> Tangle:
    t = Tangle([genesis("s000")])
    ids = ["s000"]
    for i in range(1, rng.randint(1, max_sites)):
        sid = f"s{i:03d}"
        t.add_site(Site(sid, (rng.choice(ids), _pick_recent(rng, ids))))
        ids.append(sid)
    return t


def random_event_sequence(rng: random.Random, max_sites: int = 64, keys: int = 3):
    """Yield (tangle, state) after every event of a random node history.

    Own sites come from the TDA and are applied with ``own_site``; incoming
    sites pick arbitrary (possibly discarded) parents and may carry labels.
    """
    t = Tangle([genesis("s000")])
    state = cra(t)
    n = rng.randint(2, max_sites)
    for i in range(1, n):
        sid = f"s{i:03d}"
        if rng.random() < 0.4:
            pair: ParentPair = tda(state, rng)
            site = Site(sid, tuple(pair), "me")
            t.add_site(site)
            state.own_site(site, pair)
        else:
            ids = [s.id for s in t]
            label = None
            if rng.random() < 0.2:
                label = SpendLabel(f"k{rng.randrange(keys)}", rng.choice("ABC"))
            site = None
            for attempt in range(20):
                cand = Site(sid, (_pick_recent(rng, ids), _pick_recent(rng, ids)), "peer", label=label)
                try:
                    t.add_site(cand)
                    site = cand
                    break
                except TangleError:
                    if attempt % 2:
                        label = None
            if site is None:
                continue
            state.incoming_site(site)
        yield t, state


def snapshot_equal(a: TwoStepState, b: TwoStepState) -> bool:
    return a.snapshot() == b.snapshot()
