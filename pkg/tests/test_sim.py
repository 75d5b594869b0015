import random
import statistics

import pytest

from tanglesim.errors import ConfigInvalid, MissingConflict
from tanglesim.sim import (
    ATTACK_KEY,
    TX_A,
    TX_B,
    AttackConfig,
    SimConfig,
    attack_outcome,
    merge_trial,
    node_view,
    run,
    sample_arrivals,
)
from tanglesim.tangle import Site, SpendLabel, Tangle, genesis
from tanglesim.tsa import TsaKind, cra


def test_poisson_counts():
    counts = [len(sample_arrivals(2.0, 10.0, random.Random(i))) for i in range(1000)]
    assert statistics.fmean(counts) == pytest.approx(20, rel=0.1)
    assert statistics.pvariance(counts) == pytest.approx(20, rel=0.1)


def test_arrivals_sorted_empty_and_deterministic():
    assert sample_arrivals(3.0, 0.0, random.Random(0)) == []
    a = sample_arrivals(3.0, 50.0, random.Random("x"))
    assert a == sorted(a)
    assert a == sample_arrivals(3.0, 50.0, random.Random("x"))
    with pytest.raises(ValueError):
        sample_arrivals(0.0, 1.0, random.Random(0))


def timed_tangle() -> Tangle:
    t = Tangle([genesis("g")])
    t.add_site(Site("p", ("g", "g"), "n1", 1.0))
    t.add_site(Site("q", ("p", "p"), "n2", 5.0))
    t.add_site(Site("r", ("q", "g"), "n1", 5.5))
    return t


def ids(t: Tangle) -> set[str]:
    return {s.id for s in t}


def test_node_view_threshold_and_ownership():
    t = timed_tangle()
    assert ids(node_view(t, 6.0, 0.0, "n3")) == {"g", "p", "q", "r"}
    assert ids(node_view(t, 6.0, 2.0, "n3")) == {"g", "p"}
    assert ids(node_view(t, 7.0, 2.0, "n3")) == {"g", "p", "q"}
    # own site pulls in its (otherwise invisible) parents
    assert ids(node_view(t, 6.0, 2.0, "n1")) == {"g", "p", "q", "r"}
    assert ids(node_view(t, 1.0, 100.0, "n9")) == {"g"}


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        run(SimConfig(rate=0))
    with pytest.raises(ConfigInvalid):
        run(SimConfig(latency=-1))
    with pytest.raises(ConfigInvalid):
        run(SimConfig(attack=AttackConfig(accept_weight=0)))
    with pytest.raises(ConfigInvalid):
        run(SimConfig(attack=AttackConfig(anchor="elsewhere")))


def test_run_is_deterministic():
    cfg = SimConfig(duration=60, seed=4, attack=AttackConfig(rate=2.0, accept_weight=4))
    a, b = run(cfg), run(cfg)
    assert a.events == b.events
    assert [s for s in a.tangle] == [s for s in b.tangle]
    assert a.attack_success == b.attack_success


@pytest.mark.parametrize("tsa", [TsaKind.two_step(), TsaKind.uniform(), TsaKind.mcmc(0.5)])
def test_local_copies_equal_node_view(tsa):
    cfg = SimConfig(duration=40, seed=2, tsa=tsa, attack=AttackConfig(rate=3.0, accept_weight=5))
    checked = 0

    def observe(time, k, local, world):
        nonlocal checked
        expected = node_view(world, time, cfg.latency, f"n{k}")
        assert ids(local) == ids(expected)
        checked += 1

    run(cfg, observe)
    assert checked > 100


def test_deliveries_respect_latency():
    cfg = SimConfig(duration=50, seed=1, attack=AttackConfig(rate=2.0, accept_weight=3))
    trace = run(cfg)
    t = trace.tangle
    for e in trace.events:
        if e.kind == "DELIVER":
            assert e.time >= t.arrival_time(e.site) + cfg.latency - 1e-12
            assert e.time >= t.site(e.site).issue_time + cfg.latency - 1e-12
            assert t.site(e.site).issuer != f"n{e.node}"


def test_conflict_free_two_step_run():
    trace = run(SimConfig(rate=5, latency=1, duration=100, seed=0))
    assert cra(trace.tangle).discarded == frozenset()
    sizes = [e.tip_set_size for e in trace.events if e.kind in ("DELIVER", "HONEST_ISSUE")]
    assert sizes and all(s >= 1 for s in sizes)


def test_parasite_chain_shape():
    trace = run(SimConfig(duration=60, seed=3, attack=AttackConfig(rate=2.0, accept_weight=4)))
    t = trace.tangle
    assert t.site(TX_A).label == SpendLabel(ATTACK_KEY, "A")
    assert t.site(TX_B).label == SpendLabel(ATTACK_KEY, "B")
    chain = [s for s in t if s.issuer == "adversary" and s.id.startswith("b0")]
    assert chain
    head = TX_B
    for s in chain:
        assert s.parents[0] == head
        assert s.parents[1] == t.site(TX_B).parents[0]
        head = s.id


def test_weak_attacker_fails():
    fails = 0
    for seed in range(100):
        attack = AttackConfig(rate=0.05, accept_weight=16, stop_on_evaluate=True)
        fails += not run(SimConfig(rate=5, duration=200, seed=seed, attack=attack)).attack_success
    assert fails >= 99


def test_strong_attacker_wins():
    wins = 0
    for seed in range(100):
        attack = AttackConfig(rate=50, accept_weight=1, eval_horizon=5.0, stop_on_evaluate=True)
        wins += run(SimConfig(rate=5, duration=30, seed=seed, attack=attack)).attack_success
    assert wins >= 90


def _duel(wa: int, wb: int) -> Tangle:
    t = Tangle([genesis("g"), Site(TX_A, ("g", "g"), label=SpendLabel(ATTACK_KEY, "A")),
                Site(TX_B, ("g", "g"), label=SpendLabel(ATTACK_KEY, "B"))])
    for side, extra in ((TX_A, wa - 1), (TX_B, wb - 1)):
        prev = side
        for i in range(extra):
            sid = f"{side}-{i}"
            t.add_site(Site(sid, (prev, prev)))
            prev = sid
    return t


def test_attack_outcome():
    assert attack_outcome(_duel(10, 3)) is False
    assert attack_outcome(_duel(3, 10)) is True
    tie = _duel(4, 4)
    # equal weights: the smaller id wins, exactly as the resolver decides
    assert attack_outcome(tie) == (cra(tie).winners[ATTACK_KEY] == TX_B)
    with pytest.raises(MissingConflict):
        attack_outcome(Tangle([genesis("g")]))


def test_merge_trial():
    assert merge_trial(TsaKind.two_step(), 0) == 1
    assert merge_trial(TsaKind.mcmc(1.0), 0) is None
