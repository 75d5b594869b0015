import statistics

import pytest

from oracles import descendants
from tanglesim.errors import NoAttackConfigured
from tanglesim.metrics import (
    approval_times,
    left_behind,
    mean_stderr,
    parasite_attachment,
    report,
    success_curve,
    summarize,
    tip_set_stats,
    tip_stats,
    weight_confirmation_times,
)
from tanglesim.sim import AttackConfig, SimConfig, SimTrace, run
from tanglesim.tangle import Site, Tangle, genesis
from tanglesim.tsa import TsaKind, cra


def manual_trace(tangle: Tangle, end: float, attack: AttackConfig | None = None) -> SimTrace:
    return SimTrace(SimConfig(duration=end, attack=attack), tangle, [], end)


def chain(times) -> Tangle:
    t = Tangle([genesis("g")])
    prev = "g"
    for i, time in enumerate(times):
        sid = f"c{i}"
        t.add_site(Site(sid, (prev, prev), "n0", time))
        prev = sid
    return t


def test_tip_stats_trivial_traces():
    series, avg = tip_stats(manual_trace(Tangle([genesis("g")]), 10.0), 1.0)
    assert [c for _, c in series] == [1] * 11 and avg == 1
    series, avg = tip_stats(manual_trace(chain([0.5 + i for i in range(20)]), 20.0), 0.25)
    assert {c for _, c in series} == {1} and avg == 1
    with pytest.raises(ValueError):
        tip_stats(manual_trace(Tangle([genesis("g")]), 1.0), 0)


def test_tip_stats_uniform_matches_two_lambda_h():
    avgs = [tip_stats(run(SimConfig(rate=10, latency=1, duration=60, tsa=TsaKind.uniform(), seed=s)), 1.0)[1]
            for s in range(30)]
    assert statistics.fmean(avgs) == pytest.approx(20, rel=0.3)


def test_tip_set_series_matches_batch_resolver_on_prefixes():
    trace = run(SimConfig(duration=60, seed=5, attack=AttackConfig(rate=2.0, accept_weight=4)))
    t = trace.tangle
    series, _ = tip_set_stats(trace, 5.0)
    for now, count in series:
        prefix = Tangle([s for i, s in enumerate(t) if t._arrival[i] <= now])
        assert count == len(cra(prefix).tips), now


def test_tip_set_equals_raw_without_conflicts():
    trace = run(SimConfig(duration=60, seed=1))
    assert tip_set_stats(trace, 1.0) == tip_stats(trace, 1.0)


def test_approval_times():
    mean, values = approval_times(manual_trace(chain([1.0, 2.0]), 3.0))
    # g is issued at 0 and approved at 1; c0 approved at 2; c1 never approved
    assert values == [1.0, 1.0] and mean == 1.0
    mean, values = approval_times(manual_trace(chain([0.0, 1.0, 2.0]), 3.0))
    assert values == [0.0, 1.0, 1.0]
    assert approval_times(manual_trace(Tangle([genesis("g")]), 1.0)) == (None, [])


def test_weight_confirmation_matches_oracle():
    trace = run(SimConfig(duration=30, seed=2))
    t = trace.tangle
    desc = descendants(t)
    threshold = 6
    expected = []
    for s in t:
        arrivals = sorted(t.arrival_time(d) for d in desc[s.id])
        if len(arrivals) >= threshold - 1:
            expected.append(arrivals[threshold - 2] - s.issue_time)
    _, got = weight_confirmation_times(trace, threshold)
    assert sorted(got) == pytest.approx(sorted(expected))


def test_left_behind_trivial_and_conflict_free():
    assert left_behind(manual_trace(Tangle([genesis("g")]), 0.0), 0.0) == 0
    for seed in range(30):
        trace = run(SimConfig(rate=5, latency=1, duration=200, seed=seed))
        assert left_behind(trace, 20.0) == 0


def test_left_behind_mcmc_sharp_bias_is_not_better():
    for seed in range(10):
        two = run(SimConfig(rate=5, latency=1, duration=200, seed=seed))
        mc = run(SimConfig(rate=5, latency=1, duration=200, seed=seed, tsa=TsaKind.mcmc(5.0)))
        assert left_behind(mc, 20.0) >= left_behind(two, 20.0)


def test_left_behind_skips_discarded():
    trace = run(SimConfig(duration=120, seed=0, attack=AttackConfig(rate=0.5, accept_weight=4, eval_horizon=5)))
    discarded = cra(trace.tangle)._discarded
    old_tips = [i for i in trace.tangle.tip_indices() if trace.end_time - trace.tangle.site_at(i).issue_time > 20]
    assert left_behind(trace, 20.0) == len([i for i in old_tips if i not in discarded])


def test_parasite_attachment_edge_cases():
    with pytest.raises(NoAttackConfigured):
        parasite_attachment(manual_trace(Tangle([genesis("g")]), 1.0))
    never = run(SimConfig(duration=5, seed=0, attack=AttackConfig(rate=1.0, accept_weight=10_000)))
    assert never.reveal_time is None and parasite_attachment(never) == 0.0
    trace = run(SimConfig(duration=80, seed=0, attack=AttackConfig(rate=1.0, accept_weight=4)))
    trace.reveal_time = trace.end_time + 1
    assert parasite_attachment(trace) == 0.0


def test_report_fields_in_range():
    trace = run(SimConfig(duration=80, seed=3, attack=AttackConfig(rate=2.5, accept_weight=6)))
    r = report(trace)
    assert 0 <= r.parasite_attachment_fraction <= 1
    assert r.left_behind_count >= 0 and r.discarded_count >= 0
    times = [x for x, _ in r.tip_count_series]
    assert times == sorted(times)
    assert set(r.scalars()) == set(r.SCALARS)


def test_summaries():
    assert mean_stderr([]) == (None, None)
    assert mean_stderr([2.0]) == (2.0, 0.0)
    mean, se = mean_stderr([1.0, 2.0, 3.0, None])
    assert mean == 2.0 and se == pytest.approx(1 / 3 ** 0.5)
    rows = [run(SimConfig(duration=20, seed=s)) for s in range(3)]
    out = summarize(report(t) for t in rows)
    assert out["runs"] == 3
    assert out["site_count"]["mean"] == statistics.fmean(len(t.tangle) for t in rows)
    assert out["attack_success"] == {"mean": None, "stderr": None}


def test_success_curve_without_attacker_is_zero():
    base = SimConfig(rate=5, duration=100, attack=AttackConfig(rate=0.0))
    rows = success_curve(base, [1, 2, 4], replications=10)
    assert [r["success_rate"] for r in rows] == [0.0, 0.0, 0.0]
    assert all(r["runs"] == 10 for r in rows)
    with pytest.raises(NoAttackConfigured):
        success_curve(SimConfig(), [1], 1)


def test_success_curve_reproducible_and_parallel_safe():
    base = SimConfig(rate=5, duration=100, seed=7, attack=AttackConfig(rate=2.5))
    a = success_curve(base, [2, 8], replications=12)
    b = success_curve(base, [2, 8], replications=12, jobs=2)
    assert a == b
    assert all(0 <= r["success_rate"] <= 1 for r in a)
