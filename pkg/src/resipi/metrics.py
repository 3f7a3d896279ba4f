"""Per-interval statistics, router residency and report export."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

from . import _kernel as K
from .photonic import PowerBreakdown

POWER_PARTS = ("laser_mw", "tuning_mw", "tia_mw", "driver_mw", "controller_mw")
CSV_COLUMNS = (
    "mode", "interval", "start_cycle", "end_cycle", "delivered", "latency_sum",
    "avg_latency", "max_latency", "avg_inter_latency", "avg_intra_latency",
    "gt", "g_per_chiplet", "wavelengths_per_chiplet", "load_per_chiplet",
    *POWER_PARTS, "total_mw", "energy_mj", "reconfig_events", "reconfig_energy_nj",
)


class MetricsError(RuntimeError):
    pass


@dataclass
class LatencyAccumulator:
    count: int = 0
    total: int = 0
    maximum: int = 0
    inter_count: int = 0
    inter_total: int = 0
    intra_count: int = 0
    intra_total: int = 0

    def record_delivery(self, inject_cycle: int, now: int, inter: bool | None = None) -> int:
        lat = now - inject_cycle
        if lat < 0:
            raise MetricsError("delivery precedes injection")
        self.count += 1
        self.total += lat
        self.maximum = max(self.maximum, lat)
        if inter is True:
            self.inter_count += 1
            self.inter_total += lat
        elif inter is False:
            self.intra_count += 1
            self.intra_total += lat
        return lat

    def absorb(self, delta) -> None:
        """Add a kernel accumulator delta (see ``_kernel.A_*``)."""
        self.count += int(delta[K.A_N])
        self.total += int(delta[K.A_LAT])
        self.maximum = max(self.maximum, int(delta[K.A_MAX]))
        self.inter_count += int(delta[K.A_INTER])
        self.inter_total += int(delta[K.A_SRC] + delta[K.A_GWQ] + delta[K.A_OPT] + delta[K.A_DST])
        self.intra_count += int(delta[K.A_INTRA])
        self.intra_total += int(delta[K.A_INTRA_LAT])

    @staticmethod
    def _avg(total, count):
        return total / count if count else None

    @property
    def average(self):
        return self._avg(self.total, self.count)

    @property
    def inter_average(self):
        return self._avg(self.inter_total, self.inter_count)

    @property
    def intra_average(self):
        return self._avg(self.intra_total, self.intra_count)


@dataclass
class IntervalStats:
    index: int
    start: int
    end: int
    latency: LatencyAccumulator
    g: tuple
    gt: int
    loads: tuple
    wavelengths: tuple
    power: PowerBreakdown
    energy_mj: float
    reconfig_events: int = 0
    reconfig_energy_nj: float = 0.0
    mode: str = ""

    @property
    def delivered(self) -> int:
        return self.latency.count

    @property
    def avg_latency(self):
        return self.latency.average

    def row(self) -> dict:
        lat = self.latency
        out = {
            "mode": self.mode,
            "interval": self.index,
            "start_cycle": self.start,
            "end_cycle": self.end,
            "delivered": lat.count,
            "latency_sum": lat.total,
            "avg_latency": _fmt(lat.average),
            "max_latency": lat.maximum if lat.count else "",
            "avg_inter_latency": _fmt(lat.inter_average),
            "avg_intra_latency": _fmt(lat.intra_average),
            "gt": self.gt,
            "g_per_chiplet": " ".join(map(str, self.g)),
            "wavelengths_per_chiplet": " ".join(map(str, self.wavelengths)),
            "load_per_chiplet": " ".join(_fmt(x) for x in self.loads),
        }
        for p in POWER_PARTS:
            out[p] = _fmt(getattr(self.power, p))
        out["total_mw"] = _fmt(self.power.total_mw)
        out["energy_mj"] = _fmt(self.energy_mj)
        out["reconfig_events"] = self.reconfig_events
        out["reconfig_energy_nj"] = _fmt(self.reconfig_energy_nj)
        return out


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


class ResidencyMap:
    """Average cycles a flit spends in each router."""

    def __init__(self, topology, flit_cycles, flits):
        self.topo = topology
        self.flit_cycles = [int(x) for x in flit_cycles]
        self.flits = [int(x) for x in flits]

    def residency(self, router: int):
        n = self.flits[router]
        return self.flit_cycles[router] / n if n else None

    def values(self) -> list:
        return [self.residency(r) for r in range(len(self.flits))]

    def max_router(self):
        vals = [(v, r) for r, v in enumerate(self.values()) if v is not None]
        if not vals:
            return None, None
        v, r = max(vals, key=lambda t: (t[0], -t[1]))
        return r, v

    def rows(self) -> list:
        out = []
        for r in range(len(self.flits)):
            chip, row, col = self.topo.router_coord(r)
            out.append((r, chip, row, col, self.flits[r], self.flit_cycles[r], self.residency(r)))
        return out


@dataclass
class ReconfigEvent:
    cycle: int
    kind: str  # plan | deferred | drain-timeout
    before: tuple
    after: tuple
    gt_before: int
    gt_after: int
    changed_pcmcs: int = 0
    energy_nj: float = 0.0
    affected_gateways: tuple = ()
    busy_until: int = 0
    drain_cycles: int = 0

    def line(self) -> str:
        return (f"cycle={self.cycle} kind={self.kind} before={','.join(map(str, self.before))}"
                f" after={','.join(map(str, self.after))} gt={self.gt_before}->{self.gt_after}"
                f" pcmcs={self.changed_pcmcs} energy_nj={self.energy_nj!r}"
                f" affected={','.join(map(str, self.affected_gateways)) or '-'}"
                f" busy_until={self.busy_until} drain_cycles={self.drain_cycles}")


@dataclass
class RunLog:
    mode: str
    label: str
    config_text: str
    intervals: list = field(default_factory=list)
    events: list = field(default_factory=list)
    residency: ResidencyMap | None = None
    totals: dict = field(default_factory=dict)
    kernel: str = ""

    @property
    def latency(self) -> LatencyAccumulator:
        acc = LatencyAccumulator()
        for s in self.intervals:
            a = s.latency
            acc.count += a.count
            acc.total += a.total
            acc.maximum = max(acc.maximum, a.maximum)
            acc.inter_count += a.inter_count
            acc.inter_total += a.inter_total
            acc.intra_count += a.intra_count
            acc.intra_total += a.intra_total
        return acc

    @property
    def energy_mj(self) -> float:
        return sum(s.energy_mj for s in self.intervals)

    @property
    def reconfig_energy_nj(self) -> float:
        return sum(s.reconfig_energy_nj for s in self.intervals)

    def mean_power(self) -> dict:
        cyc = sum(s.end - s.start for s in self.intervals)
        out = {}
        for p in (*POWER_PARTS, "total_mw"):
            v = sum(getattr(s.power, p) * (s.end - s.start) for s in self.intervals)
            out[p] = v / cyc if cyc else 0.0
        return out

    def summary(self) -> dict:
        lat = self.latency
        out = {
            "mode": self.label,
            "intervals": len(self.intervals),
            "delivered": lat.count,
            "avg_latency": lat.average,
            "max_latency": lat.maximum if lat.count else None,
            "energy_mj": self.energy_mj,
            "reconfig_energy_nj": self.reconfig_energy_nj,
            "reconfig_events": sum(s.reconfig_events for s in self.intervals),
        }
        for k, v in self.mean_power().items():
            out[f"mean_{k}"] = v
        out.update(self.totals)
        return out


def summarize_rows(rows) -> dict:
    """Recompute the run summary from parsed interval CSV rows."""
    delivered = sum(int(r["delivered"]) for r in rows)
    lat = sum(int(r["latency_sum"]) for r in rows)
    cyc = sum(int(r["end_cycle"]) - int(r["start_cycle"]) for r in rows)
    out = {
        "intervals": len(rows),
        "delivered": delivered,
        "avg_latency": lat / delivered if delivered else None,
        "energy_mj": sum(float(r["energy_mj"]) for r in rows),
        "reconfig_energy_nj": sum(float(r["reconfig_energy_nj"]) for r in rows),
    }
    for p in (*POWER_PARTS, "total_mw"):
        v = sum(float(r[p]) * (int(r["end_cycle"]) - int(r["start_cycle"])) for r in rows)
        out[f"mean_{p}"] = v / cyc if cyc else 0.0
    return out


def read_intervals_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _fmt_summary_value(v) -> str:
    if v is None:
        return "absent"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export(log: RunLog, out_dir) -> dict:
    """Write intervals.csv, summary.txt, residency.csv and reconfig.log."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise MetricsError(f"cannot create output directory {out_dir}: {exc}") from None
    paths = {k: os.path.join(out_dir, f) for k, f in (
        ("intervals", "intervals.csv"), ("summary", "summary.txt"),
        ("residency", "residency.csv"), ("reconfig", "reconfig.log"))}
    try:
        with open(paths["intervals"], "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            w.writeheader()
            for s in log.intervals:
                w.writerow(s.row())
        with open(paths["summary"], "w") as fh:
            for k, v in log.summary().items():
                fh.write(f"{k}: {_fmt_summary_value(v)}\n")
        with open(paths["residency"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("mode", "router", "chiplet", "row", "col", "flits", "flit_cycles", "residency"))
            if log.residency is not None:
                for r in log.residency.rows():
                    w.writerow((log.label, *r[:-1], "" if r[-1] is None else repr(r[-1])))
        with open(paths["reconfig"], "w") as fh:
            fh.write(f"# mode: {log.label}\n")
            for ev in log.events:
                fh.write(ev.line() + "\n")
    except OSError as exc:
        raise MetricsError(f"cannot write reports to {out_dir}: {exc}") from None
    return paths


class PowerIntegrator:
    """Piecewise-constant power over cycles, closed once per interval."""

    def __init__(self, freq_ghz: float):
        self.freq_ghz = freq_ghz
        self._since = 0
        self._power: PowerBreakdown | None = None
        self._sums = dict.fromkeys(POWER_PARTS, 0.0)
        self._cycles = 0
        self.reconfig_nj = 0.0
        self.events = 0

    def start(self, cycle: int, power: PowerBreakdown) -> None:
        self._since = cycle
        self._power = power

    def change(self, cycle: int, power: PowerBreakdown) -> None:
        self._accumulate(cycle)
        self._power = power

    def add_reconfig(self, nj: float) -> None:
        self.reconfig_nj += nj
        self.events += 1

    def _accumulate(self, cycle: int) -> None:
        dt = cycle - self._since
        if dt < 0:
            raise MetricsError("power segments must move forward in time")
        if dt and self._power is not None:
            for p in POWER_PARTS:
                self._sums[p] += getattr(self._power, p) * dt
            self._cycles += dt
        self._since = cycle

    def close(self, cycle: int):
        """(mean PowerBreakdown, energy in mJ, reconfig nJ, events); resets sums."""
        self._accumulate(cycle)
        cyc = self._cycles
        mean = PowerBreakdown(**{p: (self._sums[p] / cyc if cyc else 0.0) for p in POWER_PARTS})
        # mW * cycles / (GHz * 1e9) = mJ
        static = sum(self._sums.values()) / (self.freq_ghz * 1e9)
        out = (mean, static + self.reconfig_nj * 1e-6, self.reconfig_nj, self.events)
        self._sums = dict.fromkeys(POWER_PARTS, 0.0)
        self._cycles = 0
        self.reconfig_nj = 0.0
        self.events = 0
        return out


def finalize_interval(index: int, start: int, end: int, latency: LatencyAccumulator,
                      integrator: PowerIntegrator, g, gt: int, loads, wavelengths,
                      mode: str = "") -> IntervalStats:
    mean, energy, nj, events = integrator.close(end)
    mean.reconfig_energy_nj = nj
    return IntervalStats(index, start, end, latency, tuple(g), gt, tuple(loads),
                         tuple(wavelengths), mean, energy, events, nj, mode)
