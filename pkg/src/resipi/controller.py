"""Local gateway controllers (one per chiplet) and the interposer controller.

Each LGC counts packets sent through its chiplet's gateways during an
interval and moves its active gateway count one step up or down against the
L_m thresholds. The InC (on chiplet 0) sums the counts and orders the
resulting plan so that laser power always leads activation and trails
deactivation.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class ControllerError(ValueError):
    pass


def gateway_load(packets_sent, interval_len, g_c):
    """Average packet rate per active gateway over one interval."""
    if g_c < 1:
        raise ControllerError("a chiplet always has at least one active gateway")
    if interval_len <= 0:
        raise ControllerError("interval length must be positive")
    return packets_sent / (interval_len * g_c)


def thresholds_for(g: int, L_m):
    """(increase, decrease) thresholds for a chiplet running ``g`` gateways."""
    if g < 1:
        raise ControllerError("g must be >= 1")
    return L_m, L_m * (g - 1) / g


@dataclass(frozen=True)
class Thresholds:
    L_m: float
    G: int

    def t_p(self, g: int):
        return thresholds_for(g, self.L_m)[0]

    def t_n(self, g: int):
        return thresholds_for(g, self.L_m)[1]

    def table(self) -> list:
        return [thresholds_for(g, self.L_m) for g in range(1, self.G + 1)]


def update_gateway_count(load, g: int, thresholds: Thresholds) -> int:
    if not 1 <= g <= thresholds.G:
        raise ControllerError(f"g={g} outside [1, {thresholds.G}]")
    if load > thresholds.t_p(g) and g < thresholds.G:
        return g + 1
    if load < thresholds.t_n(g) and g > 1:
        return g - 1
    return g


@dataclass
class LGCState:
    chiplet: int
    g_c: int
    G: int
    interval_len: int
    packets_sent: int = 0

    def __post_init__(self):
        if not 1 <= self.g_c <= self.G:
            raise ControllerError(f"chiplet {self.chiplet}: g_c={self.g_c} outside [1, {self.G}]")

    @property
    def active_set(self) -> tuple:
        return tuple(range(self.g_c))

    def load(self):
        return gateway_load(self.packets_sent, self.interval_len, self.g_c)


@dataclass
class ReconfigurationPlan:
    cycle: int
    before: tuple
    after: tuple
    gt_before: int
    gt_after: int
    loads: tuple = ()
    steps: list = field(default_factory=list)
    deferred: bool = False
    done: bool = False

    @property
    def empty(self) -> bool:
        return self.before == self.after

    def changed_chiplets(self) -> list:
        return [c for c, (a, b) in enumerate(zip(self.before, self.after)) if a != b]


@dataclass
class InCState:
    home_chiplet: int
    mem_gateways: int
    reported: list
    pending: ReconfigurationPlan | None = None

    @property
    def gt(self) -> int:
        return sum(self.reported) + self.mem_gateways


class GatewayController:
    """Threshold controller over per-chiplet unit counts.

    Units are gateways for the dynamic interposer; the wavelength-scaling
    baseline reuses the same logic with wavelengths as units.
    """

    def __init__(self, n_chiplets: int, thresholds: Thresholds, interval_len: int,
                 mem_gateways: int = 0, initial: int | None = None, home_chiplet: int = 0):
        g0 = thresholds.G if initial is None else initial
        self.thresholds = thresholds
        self.interval_len = interval_len
        self.lgcs = [LGCState(c, g0, thresholds.G, interval_len) for c in range(n_chiplets)]
        self.inc = InCState(home_chiplet, mem_gateways, [g0] * n_chiplets)
        self.history: list = []

    @property
    def counts(self) -> tuple:
        return tuple(l.g_c for l in self.lgcs)

    @property
    def gt(self) -> int:
        return self.inc.gt

    def record_packets(self, chiplet: int, n: int) -> None:
        if n < 0:
            raise ControllerError("packet counts are non-negative")
        self.lgcs[chiplet].packets_sent += n

    def loads(self) -> tuple:
        return tuple(l.load() for l in self.lgcs)

    def end_of_interval(self, now: int) -> ReconfigurationPlan:
        before = self.counts
        loads = self.loads()
        gt0 = self.gt
        if self.inc.pending is not None and not self.inc.pending.done:
            plan = ReconfigurationPlan(now, before, before, gt0, gt0, loads, deferred=True)
        else:
            after = tuple(update_gateway_count(ld, l.g_c, self.thresholds)
                          for ld, l in zip(loads, self.lgcs))
            for l, g in zip(self.lgcs, after):
                l.g_c = g
            self.inc.reported = list(after)
            plan = ReconfigurationPlan(now, before, after, gt0, self.gt, loads)
            plan.steps = plan_steps(before, after)
            if not plan.empty:
                self.inc.pending = plan
        for l in self.lgcs:
            l.packets_sent = 0
        self.history.append(plan)
        return plan

    def complete(self, plan: ReconfigurationPlan) -> None:
        plan.done = True
        if self.inc.pending is plan:
            self.inc.pending = None

    def postpone(self, chiplets) -> None:
        """Undo a decrease whose drain timed out; it is retried next interval."""
        for c in chiplets:
            l = self.lgcs[c]
            l.g_c = min(l.g_c + 1, l.G)
            self.inc.reported[c] = l.g_c


def plan_steps(before, after) -> list:
    """Ordered (action, payload) steps; payload lists (chiplet, unit index)."""
    up = [(c, i) for c, (a, b) in enumerate(zip(before, after)) for i in range(a, b)]
    down = [(c, i) for c, (a, b) in enumerate(zip(before, after))
            for i in reversed(range(b, a))]
    if not up and not down:
        return []
    steps = []
    if down:
        steps += [("drain", down), ("deactivate", down)]
    if sum(after) > sum(before):
        steps.append(("laser-up", sum(after)))
    steps.append(("retune", None))
    if up:
        steps.append(("activate", up))
    if sum(after) < sum(before):
        steps.append(("laser-down", sum(after)))
    return steps
