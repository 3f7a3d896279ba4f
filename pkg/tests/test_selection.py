from __future__ import annotations

import itertools

import pytest

from resipi.selection import (SelectionError, balanced_partition, build_selection_table,
                              dest_gateway_for, hops, mask_of, source_gateway_for)
from resipi.topology import DEFAULT_4X4_PLACEMENT

TABLE = build_selection_table(4, 4, DEFAULT_4X4_PLACEMENT)
ROUTERS = [(r, c) for r in range(4) for c in range(4)]


def _sizes(table, mask):
    part = [table.source_for_mask(rc, mask) for rc in ROUTERS]
    return {g: part.count(g) for g in set(part)}


def test_one_gateway_serves_everyone():
    assert {source_gateway_for(rc, 1, TABLE) for rc in ROUTERS} == {0}


def test_two_gateways_split_in_halves():
    assert sorted(_sizes(TABLE, 0b11).values()) == [8, 8]


def test_three_gateways_six_five_five():
    assert sorted(_sizes(TABLE, 0b111).values()) == [5, 5, 6]


def test_four_gateways_are_quadrants():
    for rc in ROUTERS:
        g = source_gateway_for(rc, 4, TABLE)
        gr, gc = DEFAULT_4X4_PLACEMENT[g]
        assert (rc[0] >= 2) == (gr >= 2) and (rc[1] >= 2) == (gc >= 2)
    assert sorted(_sizes(TABLE, 0b1111).values()) == [4, 4, 4, 4]


def _nearest_cost(gws):
    return sum(min(hops(rc, g) for g in gws) for rc in ROUTERS)


@pytest.mark.parametrize("mask", range(1, 16))
def test_partitions_are_balanced_and_near_optimal(mask):
    sizes = _sizes(TABLE, mask)
    assert max(sizes.values()) - min(sizes.values()) <= 1
    act = [i for i in range(4) if mask >> i & 1]
    assert set(sizes) == set(act)
    cost = sum(hops(rc, DEFAULT_4X4_PLACEMENT[TABLE.source_for_mask(rc, mask)])
               for rc in ROUTERS)
    # balanced cost can exceed the unconstrained nearest-gateway cost only by
    # the routers that had to move off a full block
    free = _nearest_cost([DEFAULT_4X4_PLACEMENT[i] for i in act])
    assert free <= cost <= free + 16


def test_balanced_partition_is_optimal_on_a_small_mesh():
    # 2x3 mesh, two gateways: enumerate every balanced assignment
    gws = [(0, 0), (1, 2)]
    coords = [divmod(i, 3) for i in range(6)]
    best = min(sum(hops(coords[i], gws[a[i]]) for i in range(6))
               for a in itertools.product((0, 1), repeat=6) if sum(a) == 3)
    part = balanced_partition(2, 3, gws)
    assert sum(hops(coords[i], gws[part[i]]) for i in range(6)) == best


@pytest.mark.parametrize("mask", range(1, 16))
def test_destination_matches_exhaustive_min_hops(mask):
    act = [i for i in range(4) if mask >> i & 1]
    for rc in ROUTERS:
        want = min(act, key=lambda i: (hops(DEFAULT_4X4_PLACEMENT[i], rc), i))
        assert dest_gateway_for(rc, mask, TABLE) == want


def test_destination_examples():
    # (2, 3) is next to G2 at (2, 2)
    assert TABLE.dest_gateway_for((2, 3), [0, 1]) == 1
    assert all(TABLE.dest_gateway_for(rc, [0]) == 0 for rc in ROUTERS)


def test_table_size_and_errors():
    assert TABLE.dest[:, 1:].shape == (16, 15)
    assert (TABLE.dest[:, 1:] >= 0).all()
    with pytest.raises(SelectionError):
        TABLE.dest_gateway_for((0, 0), [])
    with pytest.raises(SelectionError):
        TABLE.source_gateway_for((0, 0), 5)


def test_trivial_table():
    t = build_selection_table(2, 2, [(0, 0)])
    assert t.dest.shape == (4, 2) and t.source_gateway_for((1, 1), 1) == 0


def test_rebuild_is_identical_and_stable():
    t2 = build_selection_table(4, 4, DEFAULT_4X4_PLACEMENT)
    assert (t2.source == TABLE.source).all() and (t2.dest == TABLE.dest).all()
    assert t2.dump() == TABLE.dump()
    assert mask_of([0, 2]) == 0b101


def test_table_is_read_only():
    with pytest.raises(ValueError):
        TABLE.source[1, 0] = 3
