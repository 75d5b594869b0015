"""The Tangle DAG: sites, confirmation, cumulative weight and conflicts.

Sites are stored in insertion order and addressed internally by their
insertion index.  Each site keeps its past cone (itself included) as a
Python integer used as a bitset, which makes ``confirms`` a single bit test
and keeps conflict bookkeeping cheap.  Cumulative weights are maintained
incrementally on insertion by the compiled kernel (see ``kernels``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import (
    DuplicateId,
    DuplicateSpendBranch,
    InvalidSite,
    NotConflictFree,
    SelfConflictingPast,
    UnknownParent,
    UnknownSite,
)

SiteId = str

_EMPTY_LABELS: Mapping[str, str] = {}


@dataclass(frozen=True)
class SpendLabel:
    """Marks a site as spending ``key``; different branches of a key conflict."""

    key: str
    branch: str


@dataclass(frozen=True)
class Site:
    id: SiteId
    parents: tuple[SiteId, ...] = ()
    issuer: str = ""
    issue_time: float = 0.0
    label: SpendLabel | None = None

    @property
    def is_genesis(self) -> bool:
        return not self.parents


def genesis(site_id: SiteId = "genesis", issuer: str = "") -> Site:
    return Site(site_id, (), issuer, 0.0, None)


def directly_conflicts(a: Site, b: Site) -> bool:
    """True iff both sites spend the same key on different branches."""
    if a.label is None or b.label is None or a.id == b.id:
        return False
    return a.label.key == b.label.key and a.label.branch != b.label.branch


class Tangle:
    """Append-only DAG of sites.

    ``arrival_time`` passed to :meth:`add_site` records when the site became
    public in this copy of the tangle; it defaults to the site's issue time.
    """

    def __init__(self, sites: Iterable[Site] = ()):
        self._sites: list[Site] = []
        self._index: dict[SiteId, int] = {}
        self._parents: list[tuple[int, ...]] = []
        self._children: list[list[int]] = []
        self._past: list[int] = []
        self._labels: list[Mapping[str, str]] = []
        self._arrival: list[float] = []
        self._members: dict[str, list[int]] = {}
        self._spent: set[tuple[str, str]] = set()
        self._tips: set[int] = set()
        self._alloc(64)
        for site in sites:
            self.add_site(site)

    # -- storage used by the kernels ------------------------------------

    _ARRAYS = (
        ("weights", 0, 1),
        ("child_head", -1, 1),
        ("child_tail", -1, 1),
        ("edge_next", -1, 2),
        ("edge_child", -1, 2),
    )

    def _alloc(self, cap: int) -> None:
        for name, fill, per_site in self._ARRAYS:
            new = np.full(cap * per_site, fill, dtype=np.int64)
            old = getattr(self, name, None)
            if old is not None:
                new[: len(old)] = old
            setattr(self, name, new)
        self._cap = cap
        if not hasattr(self, "_edges"):
            self._edges = 0

    def _link(self, parent: int, child: int) -> None:
        e = self._edges
        self._edges += 1
        self.edge_child[e] = child
        tail = self.child_tail[parent]
        if tail < 0:
            self.child_head[parent] = e
        else:
            self.edge_next[tail] = e
        self.child_tail[parent] = e

    # -- construction ----------------------------------------------------

    def add_site(self, site: Site, arrival_time: float | None = None) -> "Tangle":
        if site.id in self._index:
            raise DuplicateId(site.id)
        if not site.parents:
            if self._sites:
                raise InvalidSite(f"{site.id}: only the genesis may have no parents")
            pidx: tuple[int, ...] = ()
        else:
            if len(site.parents) != 2:
                raise InvalidSite(f"{site.id}: expected two parents, got {len(site.parents)}")
            if not self._sites:
                raise InvalidSite(f"{site.id}: the first site must be the genesis")
            try:
                p1 = self._index[site.parents[0]]
                p2 = self._index[site.parents[1]]
            except KeyError as exc:
                raise UnknownParent(f"{site.id}: parent {exc.args[0]} is absent") from None
            pidx = (p1,) if p1 == p2 else (p1, p2)

        labels = self._merge_labels(site, pidx)
        if site.label is not None and (site.label.key, site.label.branch) in self._spent:
            raise DuplicateSpendBranch(f"{site.id}: {site.label.key}/{site.label.branch}")

        idx = len(self._sites)
        if idx == self._cap:
            self._alloc(2 * self._cap)
        past = 1 << idx
        for p in pidx:
            past |= self._past[p]

        self._sites.append(site)
        self._index[site.id] = idx
        self._parents.append(pidx)
        self._children.append([])
        self._past.append(past)
        self._labels.append(labels)
        self._arrival.append(site.issue_time if arrival_time is None else float(arrival_time))
        if site.label is not None:
            self._spent.add((site.label.key, site.label.branch))
            self._members.setdefault(site.label.key, []).append(idx)
        for p in pidx:
            self._children[p].append(idx)
            self._link(p, idx)
            self._tips.discard(p)
        self._tips.add(idx)
        self.weights[idx] = 1
        kernels.bump_ancestors(self, idx)
        return self

    def _merge_labels(self, site: Site, pidx: tuple[int, ...]) -> Mapping[str, str]:
        merged: Mapping[str, str] = _EMPTY_LABELS
        sources = [self._labels[p] for p in pidx]
        if site.label is not None:
            sources.append({site.label.key: site.label.branch})
        for src in sources:
            if not src or src is merged:
                continue
            if not merged:
                merged = src
                continue
            combined = dict(merged)
            for key, branch in src.items():
                if combined.setdefault(key, branch) != branch:
                    raise SelfConflictingPast(f"{site.id}: both branches of {key!r} in past cone")
            merged = combined
        return merged

    # -- accessors -------------------------------------------------------

    def __len__(self) -> int:
        return len(self._sites)

    def __contains__(self, site_id: object) -> bool:
        return site_id in self._index

    def __iter__(self):
        return iter(self._sites)

    @property
    def genesis(self) -> SiteId:
        return self._sites[0].id

    def index(self, site_id: SiteId) -> int:
        try:
            return self._index[site_id]
        except KeyError:
            raise UnknownSite(site_id) from None

    def site(self, site_id: SiteId) -> Site:
        return self._sites[self.index(site_id)]

    def site_at(self, idx: int) -> Site:
        return self._sites[idx]

    def id_at(self, idx: int) -> SiteId:
        return self._sites[idx].id

    def arrival_time(self, site_id: SiteId) -> float:
        return self._arrival[self.index(site_id)]

    def parents_of(self, site_id: SiteId) -> tuple[SiteId, ...]:
        """Distinct parents; a duplicated parent is reported once."""
        return tuple(self._sites[p].id for p in self._parents[self.index(site_id)])

    def children_of(self, site_id: SiteId) -> list[SiteId]:
        return [self._sites[c].id for c in self._children[self.index(site_id)]]

    def past_bits(self, idx: int) -> int:
        return self._past[idx]

    def labels_in_past(self, site_id: SiteId) -> Mapping[str, str]:
        return self._labels[self.index(site_id)]

    def members(self, key: str) -> list[SiteId]:
        return [self._sites[i].id for i in self._members.get(key, ())]

    def conflict_keys(self) -> list[str]:
        """Spend keys carried by at least two sites, sorted."""
        return sorted(k for k, m in self._members.items() if len(m) >= 2)

    def past_cone(self, site_id: SiteId) -> set[SiteId]:
        bits = self._past[self.index(site_id)]
        return {self._sites[i].id for i in _iter_bits(bits)}

    # -- queries ---------------------------------------------------------

    def confirms(self, a: SiteId, b: SiteId) -> bool:
        """True iff ``b`` is a strict ancestor of ``a``."""
        ia, ib = self.index(a), self.index(b)
        return ia != ib and (self._past[ia] >> ib) & 1 == 1

    def cumulative_weight(self, site_id: SiteId) -> int:
        return int(self.weights[self.index(site_id)])

    def weight_at(self, idx: int) -> int:
        return int(self.weights[idx])

    def induced_conflicts(self, a: SiteId, b: SiteId) -> bool:
        return _labels_conflict(self.labels_in_past(a), self.labels_in_past(b))

    def is_conflict_free_set(self, sites: Iterable[SiteId]) -> bool:
        maps = [self.labels_in_past(s) for s in sites]
        for i in range(len(maps)):
            for j in range(i + 1, len(maps)):
                if _labels_conflict(maps[i], maps[j]):
                    return False
        return True

    def is_tip_set(self, sites: Iterable[SiteId]) -> bool:
        """Brute-force check that no site extends the set without conflict."""
        tips = list(dict.fromkeys(sites))
        if not self.is_conflict_free_set(tips):
            raise NotConflictFree(tips)
        tip_idx = [self.index(t) for t in tips]
        for s in range(len(self._sites)):
            past = self._past[s]
            if not any(t != s and (past >> t) & 1 for t in tip_idx):
                continue
            mine = self._labels[s]
            if not any(_labels_conflict(mine, self._labels[t]) for t in tip_idx):
                return False
        return True

    def raw_tips(self) -> list[SiteId]:
        return sorted(self._sites[i].id for i in self._tips)

    def raw_tip_count(self) -> int:
        return len(self._tips)

    def tip_indices(self) -> set[int]:
        return self._tips


def _labels_conflict(a: Mapping[str, str], b: Mapping[str, str]) -> bool:
    if not a or not b:
        return False
    if len(a) > len(b):
        a, b = b, a
    for key, branch in a.items():
        other = b.get(key)
        if other is not None and other != branch:
            return True
    return False


def _iter_bits(bits: int):
    i = 0
    while bits:
        low = bits & -bits
        i = low.bit_length() - 1
        yield i
        bits ^= low
