"""Discrete-event simulation of honest issuers and a parasite-chain attacker.

Honest sites arrive as one Poisson stream of rate ``rate`` and are attributed
round-robin to ``nodes`` issuers.  Every node keeps its own copy of the
tangle: a site published at time t reaches the other nodes at t + latency.
With an attack configured, the adversary publishes ``tx_A`` at t=0, grows a
private chain on top of the conflicting ``tx_B`` and reveals it once ``tx_A``
has gathered ``accept_weight`` in the public tangle.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, NamedTuple

from .errors import ConfigInvalid, MissingConflict
from .tangle import Site, SiteId, SpendLabel, Tangle, genesis
from .tsa import TsaKind, TwoStepState, _beats, cra, select

ATTACK_KEY = "double-spend"
ADVERSARY = "adversary"
GENESIS_ID = "genesis"
TX_A = "a-tx"
TX_B = "b-tx"
ANCHOR_POLICIES = ("tx-parent", "genesis")


@dataclass(frozen=True)
class AttackConfig:
    rate: float = 1.0
    accept_weight: int = 8
    anchor: str = "tx-parent"
    eval_horizon: float = 20.0
    reveal_time: float | None = None
    stop_on_evaluate: bool = False

    def validate(self) -> None:
        # rate 0 leaves tx_B without a parasite chain
        if not self.rate >= 0:
            raise ConfigInvalid(f"attack rate must be >= 0, got {self.rate}")
        if self.accept_weight < 1:
            raise ConfigInvalid(f"accept_weight must be >= 1, got {self.accept_weight}")
        if self.anchor not in ANCHOR_POLICIES:
            raise ConfigInvalid(f"anchor must be one of {ANCHOR_POLICIES}, got {self.anchor!r}")
        if self.eval_horizon < 0:
            raise ConfigInvalid(f"eval_horizon must be >= 0, got {self.eval_horizon}")
        if self.reveal_time is not None and self.reveal_time < 0:
            raise ConfigInvalid(f"reveal_time must be >= 0, got {self.reveal_time}")


@dataclass(frozen=True)
class SimConfig:
    rate: float = 5.0
    latency: float = 1.0
    duration: float = 1000.0
    tsa: TsaKind = field(default_factory=TsaKind)
    seed: int = 0
    nodes: int = 10
    attack: AttackConfig | None = None

    def validate(self) -> None:
        if not self.rate > 0:
            raise ConfigInvalid(f"rate must be > 0, got {self.rate}")
        if not self.latency >= 0:
            raise ConfigInvalid(f"latency must be >= 0, got {self.latency}")
        if not self.duration > 0:
            raise ConfigInvalid(f"duration must be > 0, got {self.duration}")
        if self.nodes < 1:
            raise ConfigInvalid(f"nodes must be >= 1, got {self.nodes}")
        if not isinstance(self.tsa, TsaKind):
            raise ConfigInvalid(f"tsa must be a TsaKind, got {self.tsa!r}")
        if self.attack is not None:
            self.attack.validate()


class EventKind(IntEnum):
    # order breaks ties between events scheduled for the same instant
    DELIVER = 0
    REVEAL = 1
    ADVERSARY_ISSUE = 2
    HONEST_ISSUE = 3
    EVALUATE = 4


class TraceEvent(NamedTuple):
    time: float
    kind: str
    site: SiteId
    node: int
    raw_tips: int
    tip_set_size: int | None


@dataclass
class SimTrace:
    config: SimConfig
    tangle: Tangle
    events: list[TraceEvent]
    end_time: float
    reveal_time: float | None = None
    evaluate_time: float | None = None
    attack_success: bool | None = None
    parasite_overtook: bool = False


@dataclass
class _Node:
    name: str
    tangle: Tangle
    rng: random.Random
    state: TwoStepState | None = None


def sample_arrivals(rate: float, duration: float, rng: random.Random) -> list[float]:
    """Poisson arrival times on [0, duration]."""
    if not rate > 0:
        raise ValueError(f"rate must be > 0, got {rate}")
    times = []
    t = rng.expovariate(rate)
    while t <= duration:
        times.append(t)
        t += rng.expovariate(rate)
    return times


def node_view(tangle: Tangle, now: float, h: float, issuer: str) -> Tangle:
    """The part of ``tangle`` a node sees at ``now``: sites public for at least
    ``h`` seconds plus its own sites and the genesis, closed under parents."""
    keep = 1 if len(tangle) else 0
    for i, site in enumerate(tangle):
        if site.issuer == issuer or tangle.arrival_time(site.id) + h <= now:
            keep |= tangle.past_bits(i)
    view = Tangle()
    for i, site in enumerate(tangle):
        if (keep >> i) & 1:
            view.add_site(site, tangle.arrival_time(site.id))
    return view


def attack_outcome(tangle: Tangle, key: str = ATTACK_KEY) -> bool:
    """True (success) iff the conflict resolver would keep branch B of ``key``."""
    by_branch = {tangle.site(m).label.branch: m for m in tangle.members(key)}
    if "A" not in by_branch or "B" not in by_branch:
        raise MissingConflict(key)
    a, b = by_branch["A"], by_branch["B"]
    return _beats(tangle.cumulative_weight(b), b, tangle.cumulative_weight(a), a)


class _Run:
    def __init__(self, config: SimConfig, observer):
        config.validate()
        self.cfg = config
        self.observer = observer
        self.world = Tangle([genesis(GENESIS_ID)])
        self.sites: dict[SiteId, Site] = {}
        self.nodes = []
        two_step = config.tsa.kind == "two-step"
        for k in range(config.nodes):
            local = Tangle([genesis(GENESIS_ID)])
            node = _Node(f"n{k}", local, random.Random(f"{config.seed}/node/{k}"))
            if two_step:
                node.state = cra(local)
            self.nodes.append(node)
        self.heap: list = []
        self.events: list[TraceEvent] = []
        self.end_time = config.duration
        self.private: list[Site] = []
        self.revealed = False
        self.reveal_scheduled = False
        self.evaluated = False
        self.trace = SimTrace(config, self.world, self.events, config.duration)

    def push(self, time: float, kind: EventKind, site: SiteId = "", node: int = -1) -> None:
        heapq.heappush(self.heap, (time, kind, site, node))

    def schedule(self) -> None:
        cfg = self.cfg
        honest = sample_arrivals(cfg.rate, cfg.duration, random.Random(f"{cfg.seed}/honest"))
        width = max(6, len(str(len(honest))))
        for i, t in enumerate(honest):
            self.push(t, EventKind.HONEST_ISSUE, f"h{i + 1:0{width}d}", i % cfg.nodes)
        attack = cfg.attack
        if attack is None:
            return
        self.push(0.0, EventKind.ADVERSARY_ISSUE, TX_A)
        parasite = []
        if attack.rate > 0:
            parasite = sample_arrivals(attack.rate, cfg.duration, random.Random(f"{cfg.seed}/adversary"))
        width = max(6, len(str(len(parasite))))
        for i, t in enumerate(parasite):
            self.push(t, EventKind.ADVERSARY_ISSUE, f"b{i + 1:0{width}d}")
        if attack.reveal_time is not None:
            self.push(attack.reveal_time, EventKind.REVEAL)
            self.reveal_scheduled = True

    def publish(self, site: Site, time: float, origin: int) -> None:
        self.sites[site.id] = site
        self.world.add_site(site, time)
        arrive = time + self.cfg.latency
        for j in range(len(self.nodes)):
            if j != origin:
                self.push(arrive, EventKind.DELIVER, site.id, j)

    def after_publish(self, time: float) -> None:
        attack = self.cfg.attack
        if attack is None:
            return
        if self.revealed:
            w = self.world
            if _beats(w.cumulative_weight(TX_B), TX_B, w.cumulative_weight(TX_A), TX_A):
                self.trace.parasite_overtook = True
        elif not self.reveal_scheduled and TX_A in self.world:
            if self.world.cumulative_weight(TX_A) >= attack.accept_weight:
                self.push(time, EventKind.REVEAL)
                self.reveal_scheduled = True

    def honest_issue(self, time: float, sid: SiteId, k: int) -> int | None:
        node = self.nodes[k]
        if self.observer is not None:
            self.observer(time, k, node.tangle, self.world)
        pair = select(self.cfg.tsa, node.tangle, node.rng, node.state)
        site = Site(sid, tuple(pair), node.name, time)
        node.tangle.add_site(site, time)
        if node.state is not None:
            node.state.own_site(site, pair)
        self.publish(site, time, k)
        self.after_publish(time)
        return None if node.state is None else len(node.state._tips)

    def deliver(self, time: float, sid: SiteId, k: int) -> int | None:
        node = self.nodes[k]
        site = self.sites[sid]
        node.tangle.add_site(site, time)
        if node.state is not None:
            node.state.incoming_site(site)
            return len(node.state._tips)
        return None

    def adversary_issue(self, time: float, sid: SiteId) -> None:
        attack = self.cfg.attack
        if sid == TX_A:
            # tx_A goes public while the conflicting tx_B is kept private
            tx_a = Site(TX_A, (GENESIS_ID, GENESIS_ID), ADVERSARY, time, SpendLabel(ATTACK_KEY, "A"))
            self.anchor = GENESIS_ID if attack.anchor == "genesis" else tx_a.parents[0]
            tx_b = Site(TX_B, (self.anchor, self.anchor), ADVERSARY, time, SpendLabel(ATTACK_KEY, "B"))
            self.private.append(tx_b)
            self.head = TX_B
            self.publish(tx_a, time, -1)
            self.after_publish(time)
            return
        if self.evaluated:
            return
        site = Site(sid, (self.head, self.anchor), ADVERSARY, time)
        self.head = sid
        if self.revealed:
            self.publish(site, time, -1)
            self.after_publish(time)
        else:
            self.private.append(site)

    def reveal(self, time: float) -> None:
        self.revealed = True
        self.trace.reveal_time = time
        for site in self.private:
            self.publish(site, time, -1)
        self.private = []
        self.after_publish(time)
        self.push(time + self.cfg.attack.eval_horizon, EventKind.EVALUATE)

    def run(self) -> SimTrace:
        self.schedule()
        cfg = self.cfg
        while self.heap:
            time, kind, sid, k = heapq.heappop(self.heap)
            if time > cfg.duration:
                break
            c_size = None
            if kind == EventKind.DELIVER:
                c_size = self.deliver(time, sid, k)
            elif kind == EventKind.HONEST_ISSUE:
                c_size = self.honest_issue(time, sid, k)
            elif kind == EventKind.ADVERSARY_ISSUE:
                self.adversary_issue(time, sid)
            elif kind == EventKind.REVEAL:
                if not self.revealed:
                    self.reveal(time)
            elif kind == EventKind.EVALUATE:
                self.evaluated = True
                self.trace.evaluate_time = time
                self.trace.attack_success = attack_outcome(self.world)
            self.events.append(TraceEvent(time, kind.name, sid, k, self.world.raw_tip_count(), c_size))
            if kind == EventKind.EVALUATE and cfg.attack.stop_on_evaluate:
                self.end_time = time
                break
        self.trace.end_time = self.end_time
        if cfg.attack is not None and self.trace.attack_success is None:
            # never evaluated: judge the public tangle at the end, or fail if never revealed
            self.trace.attack_success = attack_outcome(self.world) if self.revealed else False
        return self.trace


def run(config: SimConfig, observer: Callable | None = None) -> SimTrace:
    """Simulate ``config``; the result depends only on the config (seed included).

    ``observer(time, node_index, local_tangle, world)`` is called before every
    honest tip selection.
    """
    return _Run(config, observer).run()


def two_branch_tangle(side_length: int = 7) -> Tangle:
    """A main chain capped by a lightweight conflicting site, next to a heavier
    side chain carrying the other branch of the same key."""
    sites = [
        genesis("g"),
        Site("m1", ("g", "g")),
        Site("m2", ("m1", "g")),
        Site("bs", ("m2", "m2"), label=SpendLabel("k", "B")),
        Site("ws", ("g", "g"), label=SpendLabel("k", "A")),
    ]
    prev = "ws"
    for i in range(1, side_length + 1):
        sites.append(Site(f"w{i}", (prev, prev)))
        prev = f"w{i}"
    return Tangle(sites)


def merge_trial(tsa: TsaKind, seed: int, issuances: int = 10) -> int | None:
    """Issue up to ``issuances`` sites from one node on :func:`two_branch_tangle`.

    Returns the 1-based issuance whose past cone spans both branches (holds
    m2 and ws), or None if no site merged them.
    """
    tangle = two_branch_tangle()
    rng = random.Random(f"{seed}/merge")
    state = cra(tangle) if tsa.kind == "two-step" else None
    m2, ws = tangle.index("m2"), tangle.index("ws")
    for n in range(1, issuances + 1):
        pair = select(tsa, tangle, rng, state)
        site = Site(f"x{n:02d}", tuple(pair), "n0", float(n))
        tangle.add_site(site)
        if state is not None:
            state.own_site(site, pair)
        past = tangle.past_bits(tangle.index(site.id))
        if (past >> m2) & 1 and (past >> ws) & 1:
            return n
    return None
