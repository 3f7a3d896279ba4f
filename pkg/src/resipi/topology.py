"""System graph: chiplet meshes, gateway placement and the interposer wiring."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

# Placement for a 4x4 mesh in activation order G1..G4, as (row, col).
# Each gateway sits on the inner corner of its own quadrant.
DEFAULT_4X4_PLACEMENT = ((1, 1), (2, 2), (1, 2), (2, 1))


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Gateway:
    gid: int
    chiplet: int  # -1 for memory-controller gateways
    index: int  # position in the chiplet's activation order, or memory slot
    router: int  # global router id, -1 for memory gateways
    row: int = -1
    col: int = -1
    node: int = -1  # endpoint node id for memory gateways

    @property
    def is_memory(self) -> bool:
        return self.chiplet < 0


@dataclass(frozen=True)
class Topology:
    num_chiplets: int
    rows: int
    cols: int
    gateways_per_chiplet: int
    mem_gateways: int
    gateways: tuple
    placement: tuple  # (row, col) per local gateway index, shared by all chiplets

    @property
    def routers_per_chiplet(self) -> int:
        return self.rows * self.cols

    @property
    def n_routers(self) -> int:
        return self.num_chiplets * self.routers_per_chiplet

    @property
    def n_gateways(self) -> int:
        return len(self.gateways)

    @property
    def n_nodes(self) -> int:
        return self.n_routers + self.mem_gateways

    def router_id(self, chiplet: int, row: int, col: int) -> int:
        if not (0 <= chiplet < self.num_chiplets and 0 <= row < self.rows
                and 0 <= col < self.cols):
            raise TopologyError(f"router ({chiplet}, {row}, {col}) out of range")
        return chiplet * self.routers_per_chiplet + row * self.cols + col

    def router_coord(self, router: int) -> tuple:
        chiplet, local = divmod(router, self.routers_per_chiplet)
        row, col = divmod(local, self.cols)
        return chiplet, row, col

    def node_chiplet(self, node: int) -> int:
        return node // self.routers_per_chiplet if node < self.n_routers else -1

    def is_memory_node(self, node: int) -> bool:
        return node >= self.n_routers

    def gateway_id(self, chiplet: int, index: int) -> int:
        return chiplet * self.gateways_per_chiplet + index

    def chiplet_gateways(self, chiplet: int) -> list:
        g = self.gateways_per_chiplet
        return list(self.gateways[chiplet * g:(chiplet + 1) * g])

    def memory_gateway_for_node(self, node: int) -> int:
        return self.num_chiplets * self.gateways_per_chiplet + (node - self.n_routers)


def default_placement(rows: int, cols: int, g: int) -> tuple:
    if rows == 4 and cols == 4 and 1 <= g <= 4:
        return DEFAULT_4X4_PLACEMENT[:g]
    if g == 1:
        return (((rows - 1) // 2, (cols - 1) // 2),)
    raise TopologyError(
        f"no built-in gateway placement for a {rows}x{cols} mesh with {g} gateways;"
        " give gateway.<chiplet>.<idx> entries in the config")


def build_topology(config) -> Topology:
    config.validate()
    rows, cols, g = config.mesh_rows, config.mesh_cols, config.max_gateways_per_chiplet
    placement = config.placement_for(0) or default_placement(rows, cols, g)
    if len(placement) != g:
        raise TopologyError(f"expected {g} gateway placements, got {len(placement)}")
    gateways = []
    r_per = rows * cols
    for c in range(config.num_chiplets):
        coords = config.placement_for(c) or placement
        if len(coords) != g:
            raise TopologyError(f"chiplet {c}: expected {g} gateway placements")
        if len(set(coords)) != len(coords):
            raise TopologyError(f"chiplet {c}: two gateways share a router")
        for i, (row, col) in enumerate(coords):
            if not (0 <= row < rows and 0 <= col < cols):
                raise TopologyError(f"chiplet {c}: gateway {i} at ({row}, {col}) is off-mesh")
            gateways.append(Gateway(len(gateways), c, i, c * r_per + row * cols + col, row, col))
    n_routers = config.num_chiplets * r_per
    for m in range(config.mem_gateways):
        gateways.append(Gateway(len(gateways), -1, m, -1, node=n_routers + m))
    return Topology(config.num_chiplets, rows, cols, g, config.mem_gateways,
                    tuple(gateways), tuple(tuple(p) for p in placement))


# -- interposer wiring -------------------------------------------------------

LASER = ("laser",)


@dataclass(frozen=True)
class MRGNode:
    index: int  # 1-based, as MRG_k
    modulators: int
    filter_rows: int
    rotated: bool


@dataclass(frozen=True)
class PCMCNode:
    index: int  # 1-based, as PCMC_k
    rotated: bool


@dataclass
class InterposerLayout:
    n: int
    wavelengths: int
    mrgs: list = field(default_factory=list)
    pcmcs: list = field(default_factory=list)
    edges: dict = field(default_factory=dict)  # source port -> destination port

    def successors(self, port):
        return self.edges.get(port)

    def predecessors(self) -> dict:
        pred = {}
        for s, d in self.edges.items():
            pred.setdefault(d, []).append(s)
        return pred

    def ports(self) -> set:
        ports = {LASER}
        for k in range(1, self.n + 1):
            for j in range(1, self.n + 1):
                ports.add(("mrg", k, "I", j))
                ports.add(("mrg", k, "O", j))
            ports.add(("term", k))
        for k in range(1, self.n):
            for p in ("I", "C", "B"):
                ports.add(("pcmc", k, p))
        return ports

    def reachable_from_laser(self) -> set:
        # power travels laser -> PCMC chain -> MRG I_1 -> waveguide
        seen = {LASER}
        todo = deque([LASER])
        while todo:
            p = todo.popleft()
            nxt = []
            if p in self.edges:
                nxt.append(self.edges[p])
            if p[0] == "pcmc" and p[2] == "I":
                nxt += [("pcmc", p[1], "C"), ("pcmc", p[1], "B")]
            if p[0] == "mrg" and p[2] == "I":
                nxt.append(("mrg", p[1], "O", p[3]))
            for q in nxt:
                if q not in seen:
                    seen.add(q)
                    todo.append(q)
        return seen

    def validate(self) -> None:
        pred = self.predecessors()
        for d, srcs in pred.items():
            if len(srcs) > 1:
                raise TopologyError(f"port {d} has {len(srcs)} incoming edges")
        internal_inputs = {("pcmc", k, "I") for k in range(1, self.n)}
        internal_inputs |= {("mrg", k, "I", j) for k in range(1, self.n + 1)
                            for j in range(1, self.n + 1)}
        for p in internal_inputs:
            if p not in pred:
                raise TopologyError(f"input port {p} dangles")
        sources = {("pcmc", k, s) for k in range(1, self.n) for s in ("C", "B")}
        sources |= {("mrg", k, "O", j) for k in range(1, self.n + 1)
                    for j in range(1, self.n + 1)}
        sources.add(LASER)
        for p in sources:
            if p not in self.edges:
                raise TopologyError(f"output port {p} dangles")


def _mrg_row_rotated(k: int) -> bool:
    # two MRGs per layout row; even rows (2nd, 4th, ...) are mirrored
    return ((k - 1) // 2) % 2 == 1


def build_interposer(n_gateways: int, wavelengths: int) -> InterposerLayout:
    """MRG/PCMC chain for ``n_gateways`` writers.

    Waveguide entering MRG_k at I_1 is modulated there, then visits the
    other N-1 MRGs on I_2..I_N; the O_N exits end on a terminator.
    """
    n = n_gateways
    if n < 2:
        raise TopologyError("an interposer needs at least two gateways")
    if wavelengths < 1:
        raise TopologyError("at least one wavelength is required")
    lay = InterposerLayout(n, wavelengths)
    lay.mrgs = [MRGNode(k, wavelengths, (n - 1) * wavelengths, _mrg_row_rotated(k))
                for k in range(1, n + 1)]
    lay.pcmcs = [PCMCNode(k, _mrg_row_rotated(k)) for k in range(1, n)]
    e = lay.edges
    e[LASER] = ("pcmc", 1, "I")
    for k in range(1, n):
        e[("pcmc", k, "C")] = ("mrg", k, "I", 1)
        if k < n - 1:
            e[("pcmc", k, "B")] = ("pcmc", k + 1, "I")
        else:
            e[("pcmc", k, "B")] = ("mrg", n, "I", 1)
    for k in range(1, n + 1):
        nxt = k + 1 if k < n else 1
        for j in range(1, n):
            e[("mrg", k, "O", j)] = ("mrg", nxt, "I", j + 1)
        e[("mrg", k, "O", n)] = ("term", k)
    return lay
