from __future__ import annotations

import math

import numpy as np
import pytest

from resipi.config import SystemConfig
from resipi.topology import build_topology
from resipi.traffic import (BLOCK, Phase, TraceError, TraceRecord, TrafficError, TrafficGenerator,
                            TrafficSpec, calibrated_phases, load_trace, phased_workload,
                            transpose_map, write_trace)

TOPO = build_topology(SystemConfig())


def gen(spec, seed=1, start=0):
    return TrafficGenerator(spec, TOPO, 256, seed, start_cycle=start)


def test_zero_rate_is_silent():
    c, s, d = gen(TrafficSpec(rate=0.0)).generate(0, 50_000)
    assert len(c) == 0


def test_uniform_count_within_three_sigma():
    n, p, cycles = 64, 0.01, 1_000_000
    _, src, _ = gen(TrafficSpec(rate=p, mem_fraction=0.0)).generate(0, cycles)
    got = int((src < n).sum())
    mean = n * cycles * p
    sigma = math.sqrt(n * cycles * p * (1 - p))
    assert abs(got - mean) <= 3 * sigma
    assert abs(got / mean - 1) < 0.01


def test_destinations_never_equal_source_and_hit_memory():
    _, src, dst = gen(TrafficSpec(rate=0.05, mem_fraction=0.1)).generate(0, 20_000)
    assert (src != dst).all()
    core = src < 64
    frac = (dst[core] >= 64).mean()
    assert 0.08 < frac < 0.12
    assert (dst[~core] < 64).all()


def test_transpose_is_a_fixed_permutation():
    m = transpose_map(64)
    assert sorted(m) == list(range(64))
    assert m[1] == 8 and m[8] == 1 and (m[m] == np.arange(64)).all()
    _, src, dst = gen(TrafficSpec(pattern="transpose", rate=0.05, mem_fraction=0)).generate(0, 5000)
    core = src < 64
    assert (dst[core] == m[src[core]]).all()
    with pytest.raises(TrafficError):
        transpose_map(48)


def test_hotspot_targets():
    spec = TrafficSpec(pattern="hotspot", rate=0.02, hotspot_nodes=(5,), mem_fraction=0)
    _, src, dst = gen(spec).generate(0, 5000)
    core = src < 64
    assert ((dst[core] == 5) | (src[core] == 5)).all()


def test_same_seed_same_stream_regardless_of_chunking():
    g1, g2 = gen(TrafficSpec(rate=0.01), seed=7), gen(TrafficSpec(rate=0.01), seed=7)
    whole = g1.generate(0, 5 * BLOCK + 17)
    parts = [g2.generate(a, b) for a, b in ((0, 100), (100, 3000), (3000, 5 * BLOCK + 17))]
    for i in range(3):
        assert (whole[i] == np.concatenate([p[i] for p in parts])).all()
    other = gen(TrafficSpec(rate=0.01), seed=8).generate(0, 5 * BLOCK + 17)
    assert not np.array_equal(whole[1], other[1])


def test_phased_rates_step_at_boundaries():
    spec = phased_workload([Phase("uniform", 0.02, 100_000), Phase("uniform", 0.002, 100_000),
                            Phase("uniform", 0.008, 100_000)], mem_fraction=0)
    g = gen(spec)
    counts = []
    for k in range(3):
        _, src, _ = g.generate(k * 100_000, (k + 1) * 100_000)
        counts.append((src < 64).sum() / (64 * 100_000))
    for got, want in zip(counts, (0.02, 0.002, 0.008)):
        assert abs(got - want) < 5 * math.sqrt(want / (64 * 100_000))
    assert g.rate_at(99_999) == 0.02 and g.rate_at(100_000) == 0.002


def test_phase_start_offset():
    g = gen(calibrated_phases(1000, 2), start=500)
    assert g.rate_at(2499) == 0.007 and g.rate_at(2500) == 0.0004


def test_single_phase_equals_plain_pattern():
    a = gen(phased_workload([Phase("uniform", 0.01, 10_000)])).generate(0, 10_000)
    b = gen(TrafficSpec(rate=0.01)).generate(0, 10_000)
    for x, y in zip(a, b):
        assert (x == y).all()


def test_zero_duration_phase_rejected():
    with pytest.raises(TrafficError):
        phased_workload([Phase("uniform", 0.01, 0)])
    with pytest.raises(TrafficError):
        TrafficSpec(pattern="phased", phases=(Phase("uniform", 0.1, 50),)).validate(1000)


def test_trace_round_trip(tmp_path):
    recs = [TraceRecord(0, 1, 2, 256), TraceRecord(5, 3, 64, 512), TraceRecord(5, 65, 0, 32)]
    p = tmp_path / "t.trace"
    write_trace(p, recs)
    assert list(load_trace(p, TOPO.n_nodes)) == recs


def test_empty_trace(tmp_path):
    p = tmp_path / "e.trace"
    p.write_text("# nothing\n\n")
    assert list(load_trace(p)) == []


@pytest.mark.parametrize("body, line", [
    ("0 1 2 256\n3 1 99 256\n", 2),
    ("0 1 2\n", 1),
    ("5 1 2 256\n4 1 2 256\n", 2),
    ("0 1 x 256\n", 1),
    ("# hdr\n0 3 3 256\n", 2),
])
def test_bad_trace_lines(tmp_path, body, line):
    p = tmp_path / "bad.trace"
    p.write_text(body)
    with pytest.raises(TraceError) as ei:
        list(load_trace(p, TOPO.n_nodes))
    assert ei.value.line == line
