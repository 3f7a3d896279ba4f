from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resipi.config import SystemConfig
from resipi.topology import (LASER, TopologyError, build_interposer, build_topology,
                             default_placement)


def test_default_system_has_64_routers_and_18_gateways():
    t = build_topology(SystemConfig())
    assert t.n_routers == 64
    assert t.n_gateways == 18
    assert sum(g.is_memory for g in t.gateways) == 2


def test_minimal_system():
    cfg = SystemConfig(num_chiplets=2, mesh_rows=2, mesh_cols=2,
                       max_gateways_per_chiplet=1, mem_gateways=0)
    t = build_topology(cfg)
    assert (t.n_routers, t.n_gateways) == (8, 2)


def test_no_pattern_beyond_four_gateways_on_4x4():
    with pytest.raises(TopologyError):
        build_topology(SystemConfig(max_gateways_per_chiplet=5))


def test_other_meshes_need_explicit_placement():
    with pytest.raises(TopologyError):
        default_placement(3, 3, 2)
    assert default_placement(3, 3, 1) == ((1, 1),)


def test_one_gateway_per_router_and_bijection():
    t = build_topology(SystemConfig())
    routers = [g.router for g in t.gateways if not g.is_memory]
    assert len(routers) == len(set(routers))
    assert [g.gid for g in t.gateways] == list(range(t.n_gateways))
    lay = build_interposer(t.n_gateways, 4)
    assert len(lay.mrgs) == t.n_gateways


def test_shared_router_rejected():
    cfg = SystemConfig(max_gateways_per_chiplet=2,
                       placements=(((0, 0), (1, 1)), ((0, 1), (1, 1))))
    with pytest.raises(TopologyError):
        build_topology(cfg)


def test_construction_is_deterministic():
    assert build_topology(SystemConfig()) == build_topology(SystemConfig())
    assert build_interposer(18, 4).edges == build_interposer(18, 4).edges


def test_six_gateway_layout():
    lay = build_interposer(6, 4)
    assert len(lay.mrgs) == 6 and len(lay.pcmcs) == 5
    assert all(m.modulators == 4 and m.filter_rows == 20 for m in lay.mrgs)
    for j in range(1, 6):
        assert lay.edges[("mrg", 6, "O", j)] == ("mrg", 1, "I", j + 1)
    assert [m.rotated for m in lay.mrgs] == [False, False, True, True, False, False]


def test_two_gateway_chain():
    lay = build_interposer(2, 1)
    assert lay.edges[LASER] == ("pcmc", 1, "I")
    assert lay.edges[("pcmc", 1, "C")] == ("mrg", 1, "I", 1)
    assert lay.edges[("pcmc", 1, "B")] == ("mrg", 2, "I", 1)


def test_degenerate_chain_rejected():
    with pytest.raises(TopologyError):
        build_interposer(1, 4)


@pytest.mark.parametrize("n", range(2, 33))
def test_wiring_is_total(n):
    lay = build_interposer(n, 4)
    lay.validate()
    seen = lay.reachable_from_laser()
    for k in range(1, n + 1):
        assert ("mrg", k, "I", 1) in seen
    # each O_j (j < N) lands on exactly one I_{j+1}; nothing feeds two inputs
    targets = {}
    for k in range(1, n + 1):
        for j in range(1, n):
            d = lay.edges[("mrg", k, "O", j)]
            assert d[2] == "I" and d[3] == j + 1
            assert d not in targets
            targets[d] = (k, j)
    for k in range(1, n):
        nxt = ("pcmc", k + 1, "I") if k < n - 1 else ("mrg", n, "I", 1)
        assert lay.edges[("pcmc", k, "B")] == nxt
        assert lay.edges[("pcmc", k, "C")] == ("mrg", k, "I", 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 32), st.integers(1, 16))
def test_every_port_has_at_most_one_edge(n, w):
    lay = build_interposer(n, w)
    pred = lay.predecessors()
    assert all(len(v) == 1 for v in pred.values())
    assert set(lay.edges) | set(pred) <= lay.ports()
