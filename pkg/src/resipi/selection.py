"""Per-packet gateway selection tables.

Source side: for every active set, routers are split into blocks whose sizes
differ by at most one, with the total router-to-gateway hop count minimal.
Destination side: the active gateway closest (in XY hops) to the target
router, lowest index on ties. Both are computed once, at build time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


class SelectionError(ValueError):
    pass


def hops(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def balanced_sizes(n_routers: int, k: int) -> list:
    q, rem = divmod(n_routers, k)
    return [q + 1 if i < rem else q for i in range(k)]


def balanced_partition(rows: int, cols: int, gateways: list) -> list:
    """Assign every router to one of ``gateways`` ((row, col) list).

    Returns the gateway position (index into ``gateways``) per router in
    row-major order.
    """
    k = len(gateways)
    n = rows * cols
    coords = [divmod(i, cols) for i in range(n)]
    slots = []
    for gi, size in enumerate(balanced_sizes(n, k)):
        slots += [gi] * size
    cost = np.empty((n, n), dtype=np.int64)
    for r, rc in enumerate(coords):
        for s, gi in enumerate(slots):
            cost[r, s] = hops(rc, gateways[gi]) * 1_000_000 + gi * (r + 1)
    rows_idx, cols_idx = linear_sum_assignment(cost)
    out = [0] * n
    for r, s in zip(rows_idx, cols_idx):
        out[r] = slots[s]
    return out


@dataclass(frozen=True)
class SelectionTable:
    rows: int
    cols: int
    placement: tuple
    source: np.ndarray  # [mask, router] -> local gateway index
    dest: np.ndarray  # [router, mask] -> local gateway index

    @property
    def n_gateways(self) -> int:
        return len(self.placement)

    @property
    def n_routers(self) -> int:
        return self.rows * self.cols

    def local(self, router) -> int:
        if isinstance(router, tuple):
            row, col = router
            if not (0 <= row < self.rows and 0 <= col < self.cols):
                raise SelectionError(f"router {router} outside the mesh")
            return row * self.cols + col
        return int(router)

    def _check_mask(self, mask: int) -> None:
        if not 0 < mask < (1 << self.n_gateways):
            raise SelectionError(f"active set {mask:#x} is empty or out of range")

    def source_for_mask(self, router, mask: int) -> int:
        self._check_mask(mask)
        return int(self.source[mask, self.local(router)])

    def source_gateway_for(self, router, g_c: int) -> int:
        if not 1 <= g_c <= self.n_gateways:
            raise SelectionError(f"g_c={g_c} outside [1, {self.n_gateways}]")
        return self.source_for_mask(router, (1 << g_c) - 1)

    def dest_gateway_for(self, router, active) -> int:
        mask = active if isinstance(active, int) else mask_of(active)
        self._check_mask(mask)
        return int(self.dest[self.local(router), mask])

    def dump(self) -> str:
        lines = [f"# selection table {self.rows}x{self.cols}, gateways at "
                 + " ".join(f"G{i + 1}={p}" for i, p in enumerate(self.placement))]
        for g in range(1, self.n_gateways + 1):
            lines.append(f"source g={g}")
            part = self.source[(1 << g) - 1]
            for r in range(self.rows):
                lines.append("  " + " ".join(
                    f"G{part[r * self.cols + c] + 1}" for c in range(self.cols)))
        for mask in range(1, 1 << self.n_gateways):
            names = ",".join(f"G{i + 1}" for i in range(self.n_gateways) if mask >> i & 1)
            lines.append(f"dest {{{names}}}")
            for r in range(self.rows):
                lines.append("  " + " ".join(
                    f"G{self.dest[r * self.cols + c, mask] + 1}" for c in range(self.cols)))
        return "\n".join(lines) + "\n"


def mask_of(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def build_selection_table(rows: int, cols: int, placement) -> SelectionTable:
    placement = tuple(tuple(p) for p in placement)
    g = len(placement)
    if g == 0:
        raise SelectionError("need at least one gateway")
    n = rows * cols
    nm = 1 << g
    source = np.full((nm, n), -1, dtype=np.int64)
    dest = np.full((n, nm), -1, dtype=np.int64)
    coords = [divmod(i, cols) for i in range(n)]
    for mask in range(1, nm):
        act = [i for i in range(g) if mask >> i & 1]
        part = balanced_partition(rows, cols, [placement[i] for i in act])
        source[mask] = [act[p] for p in part]
        for r, rc in enumerate(coords):
            dest[r, mask] = min(act, key=lambda i: (hops(placement[i], rc), i))
    source.setflags(write=False)
    dest.setflags(write=False)
    return SelectionTable(rows, cols, placement, source, dest)


def source_gateway_for(router, g_c: int, table: SelectionTable) -> int:
    return table.source_gateway_for(router, g_c)


def dest_gateway_for(router, active, table: SelectionTable) -> int:
    return table.dest_gateway_for(router, active)
