from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resipi.controller import (ControllerError, GatewayController, Thresholds, gateway_load,
                               plan_steps, thresholds_for, update_gateway_count)

LM = 0.0152


@pytest.mark.parametrize("p, t, g, load", [
    (1520, 100_000, 1, 0.0152), (0, 100_000, 3, 0.0), (3040, 100_000, 2, 0.0152),
])
def test_gateway_load(p, t, g, load):
    assert gateway_load(p, t, g) == pytest.approx(load, rel=1e-15)


def test_zero_gateways_rejected():
    with pytest.raises(ControllerError):
        gateway_load(10, 100, 0)


def test_threshold_values():
    assert thresholds_for(1, LM) == (LM, 0)
    assert thresholds_for(2, Fraction(LM))[1] == Fraction(LM) / 2
    assert thresholds_for(4, Fraction(LM))[1] == Fraction(3, 4) * Fraction(LM)


@pytest.mark.parametrize("g", range(1, 9))
def test_headroom_times_g_is_lm(g):
    lm = Fraction(152, 10_000)
    t_p, t_n = thresholds_for(g, lm)
    assert t_p == lm
    assert (lm - t_n) * g == lm


@pytest.mark.parametrize("load, g, out", [
    (1.1 * LM, 2, 3), (0.4 * LM, 2, 1), (1.1 * LM, 4, 4), (0.0, 1, 1),
    (LM, 2, 2), (0.5 * LM, 2, 2),  # boundaries do not move
])
def test_update_examples(load, g, out):
    assert update_gateway_count(load, g, Thresholds(LM, 4)) == out


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 0.1), st.integers(1, 4))
def test_update_stays_in_range_and_moves_one_step(load, g):
    g2 = update_gateway_count(load, g, Thresholds(LM, 4))
    assert 1 <= g2 <= 4 and abs(g2 - g) <= 1


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 1.05), st.integers(1, 3))
def test_no_thrash_after_an_increase(frac, g):
    # chiplet offered rate L = frac-scaled so per-gateway load just exceeds L_m
    th = Thresholds(LM, 4)
    total = LM * g * (1 + frac * 0.05)
    g1 = update_gateway_count(total / g, g, th)
    assert g1 == g + 1
    assert update_gateway_count(total / g1, g1, th) == g1


def _controller(counts, G=4):
    c = GatewayController(len(counts), Thresholds(LM, G), 100_000, mem_gateways=2)
    for l, g in zip(c.lgcs, counts):
        l.g_c = g
    c.inc.reported = list(counts)
    return c


def test_mixed_plan_keeps_gt_but_retunes():
    c = _controller([1, 2, 1, 2])
    for ch, (f, g) in enumerate(zip((1.2, 0.3, 1.2, 0.3), (1, 2, 1, 2))):
        c.record_packets(ch, round(f * LM * 100_000 * g))
    plan = c.end_of_interval(100_000)
    assert plan.before == (1, 2, 1, 2) and plan.after == (2, 1, 2, 1)
    assert plan.gt_before == plan.gt_after == 8
    actions = [a for a, _ in plan.steps]
    assert actions == ["drain", "deactivate", "retune", "activate"]
    assert dict(plan.steps)["activate"] == [(0, 1), (2, 1)]
    assert dict(plan.steps)["drain"] == [(1, 1), (3, 1)]


def test_quiet_interval_gives_empty_plan_and_resets_counters():
    c = _controller([2, 2, 2, 2])
    for ch in range(4):
        c.record_packets(ch, round(0.7 * LM * 100_000 * 2))
    plan = c.end_of_interval(100_000)
    assert plan.empty and plan.steps == []
    assert all(l.packets_sent == 0 for l in c.lgcs)


def test_step_order_for_growth_and_shrink():
    assert [a for a, _ in plan_steps((1, 1), (2, 1))] == ["laser-up", "retune", "activate"]
    assert [a for a, _ in plan_steps((3, 3), (2, 3))] == [
        "drain", "deactivate", "retune", "laser-down"]
    assert plan_steps((2, 2), (2, 2)) == []


def test_pending_plan_defers_changes():
    c = _controller([1, 1])
    c.record_packets(0, 10**6)
    p1 = c.end_of_interval(100_000)
    assert p1.after == (2, 1)
    c.record_packets(0, 10**6)
    p2 = c.end_of_interval(200_000)
    assert p2.deferred and c.counts == (2, 1)
    c.complete(p1)
    c.record_packets(0, 10**6)
    assert c.end_of_interval(300_000).after == (3, 1)


def test_postpone_restores_count():
    c = _controller([3, 3])
    plan = c.end_of_interval(100_000)  # idle: both drop to 2
    assert plan.after == (2, 2)
    c.postpone([1])
    assert c.counts == (2, 3) and c.gt == 7


def test_gt_counts_memory_gateways():
    c = _controller([4, 4, 4, 4])
    assert c.gt == 18


def test_counter_hygiene():
    c = _controller([2, 2])
    sent = [0, 0]
    for k in range(5):
        for ch in range(2):
            c.record_packets(ch, 100 * (k + ch))
            sent[ch] += 100 * (k + ch)
        c.end_of_interval(k)
    seen = [sum(round(p.loads[ch] * 100_000 * p.before[ch]) for p in c.history)
            for ch in range(2)]
    assert seen == sent
