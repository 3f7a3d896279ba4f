"""Offered load: synthetic patterns, phased workloads and trace files.

Synthetic injection is Bernoulli per node per cycle. Random draws are keyed
on (seed, block of cycles), so any cycle window replays identically no
matter how the simulation chunks its calls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

PATTERNS = ("uniform", "transpose", "hotspot", "phased", "trace")
SYNTHETIC = ("uniform", "transpose", "hotspot")
BLOCK = 1024


class TrafficError(ValueError):
    pass


class TraceError(TrafficError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class Phase:
    pattern: str
    rate: float
    cycles: int


@dataclass(frozen=True)
class TrafficSpec:
    pattern: str = "uniform"
    rate: float = 0.005  # packets / node / cycle
    mem_fraction: float = 0.1
    hotspot_nodes: tuple = ()
    hotspot_weights: tuple = ()
    hotspot_fraction: float = 1.0
    phases: tuple = ()
    trace_path: str | None = None

    def validate(self, interval_cycles: int | None = None) -> None:
        if self.pattern not in PATTERNS:
            raise TrafficError(f"unknown traffic pattern {self.pattern!r}")
        if not 0 <= self.rate <= 1:
            raise TrafficError("injection rate must lie in [0, 1]")
        if not 0 <= self.mem_fraction <= 1:
            raise TrafficError("mem_fraction must lie in [0, 1]")
        if not 0 <= self.hotspot_fraction <= 1:
            raise TrafficError("hotspot_fraction must lie in [0, 1]")
        if self.pattern == "hotspot":
            if not self.hotspot_nodes:
                raise TrafficError("hotspot pattern needs hotspot_nodes")
            if self.hotspot_weights and len(self.hotspot_weights) != len(self.hotspot_nodes):
                raise TrafficError("hotspot_weights must match hotspot_nodes")
        if self.pattern == "phased":
            if not self.phases:
                raise TrafficError("phased pattern needs at least one phase")
            for ph in self.phases:
                if ph.pattern not in SYNTHETIC:
                    raise TrafficError(f"phase pattern {ph.pattern!r} must be synthetic")
                if not 0 <= ph.rate <= 1:
                    raise TrafficError("phase rate must lie in [0, 1]")
                if ph.cycles <= 0:
                    raise TrafficError("phase duration must be positive")
                if interval_cycles is not None and ph.cycles < interval_cycles:
                    raise TrafficError("phase duration must span at least one interval")
        if self.pattern == "trace" and not self.trace_path:
            raise TrafficError("trace pattern needs trace_path")

    def with_rate(self, rate: float) -> "TrafficSpec":
        return replace(self, rate=rate)


def phased_workload(phases, mem_fraction: float = 0.1) -> TrafficSpec:
    """Traffic that switches pattern and rate at the given phase boundaries."""
    phases = tuple(p if isinstance(p, Phase) else Phase(*p) for p in phases)
    if not phases:
        raise TrafficError("a phased workload needs at least one phase")
    for p in phases:
        if p.cycles <= 0:
            raise TrafficError("zero-duration phase")
    return TrafficSpec(pattern="phased", phases=phases, mem_fraction=mem_fraction,
                       rate=phases[0].rate)


# High, low and medium load for the default 4 x 4 x 4 system; picked so the
# per-gateway load settles at 4, 1 and 2 gateways per chiplet respectively.
CALIBRATED_RATES = (("uniform", 0.007), ("uniform", 0.0004), ("uniform", 0.0017))


def calibrated_phases(interval_cycles: int, intervals_per_phase: int = 10,
                      mem_fraction: float = 0.1) -> TrafficSpec:
    """High, low, then medium load, each held for ``intervals_per_phase`` intervals."""
    n = interval_cycles * intervals_per_phase
    return phased_workload([Phase(p, r, n) for p, r in CALIBRATED_RATES], mem_fraction)


def parse_phases(text: str) -> tuple:
    """Parse ``pattern:rate:cycles, ...``."""
    phases = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise TrafficError(f"bad phase {item!r}; expected pattern:rate:cycles")
        phases.append(Phase(parts[0].strip(), float(parts[1]), int(float(parts[2]))))
    return tuple(phases)


def transpose_map(n: int) -> np.ndarray:
    """Fixed permutation: swap index halves when n = 4^m, else bit-reverse."""
    if n < 2 or n & (n - 1):
        raise TrafficError("transpose needs a power-of-two node count")
    bits = n.bit_length() - 1
    idx = np.arange(n)
    if bits % 2 == 0:
        half = bits // 2
        mask = (1 << half) - 1
        return ((idx & mask) << half) | (idx >> half)
    out = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        out |= ((idx >> b) & 1) << (bits - 1 - b)
    return out


class TrafficGenerator:
    """Synthetic injection stream for one topology and seed."""

    def __init__(self, spec: TrafficSpec, topology, packet_bits: int, seed: int,
                 start_cycle: int = 0):
        spec.validate()
        if spec.pattern == "trace":
            raise TrafficError("use TraceTraffic for trace-driven runs")
        self.spec = spec
        self.packet_bits = packet_bits
        self.seed = int(seed)
        self.start_cycle = start_cycle
        self.n_cores = topology.n_routers
        self.n_mem = topology.mem_gateways
        self.n_src = self.n_cores + self.n_mem
        self._cache = (None, None)
        patterns = {spec.pattern} if spec.pattern != "phased" else {p.pattern for p in spec.phases}
        self._transpose = transpose_map(self.n_cores) if "transpose" in patterns else None
        if spec.hotspot_nodes:
            nodes = np.asarray(spec.hotspot_nodes, dtype=np.int64)
            if nodes.min() < 0 or nodes.max() >= self.n_cores:
                raise TrafficError("hotspot node out of range")
            w = np.asarray(spec.hotspot_weights or [1.0] * len(nodes), dtype=float)
            self._hot_nodes = nodes
            self._hot_cdf = np.cumsum(w / w.sum())
        else:
            self._hot_nodes = None
        if spec.pattern == "phased":
            bounds = np.cumsum([p.cycles for p in spec.phases])
            self._phase_bounds = start_cycle + bounds
        else:
            self._phase_bounds = None

    def phase_index(self, cycle) -> np.ndarray:
        if self._phase_bounds is None:
            return np.zeros_like(np.asarray(cycle))
        idx = np.searchsorted(self._phase_bounds, cycle, side="right")
        return np.minimum(idx, len(self.spec.phases) - 1)

    def rate_at(self, cycle: int) -> float:
        if self._phase_bounds is None:
            return self.spec.rate
        return self.spec.phases[int(self.phase_index(cycle))].rate

    def _pattern_rates(self, cycles: np.ndarray):
        if self._phase_bounds is None:
            return ([self.spec.pattern], np.zeros(len(cycles), dtype=np.int64),
                    np.full(len(cycles), self.spec.rate))
        idx = self.phase_index(cycles)
        rates = np.array([p.rate for p in self.spec.phases])[idx]
        return [p.pattern for p in self.spec.phases], idx, rates

    def _block(self, b: int):
        if self._cache[0] == b:
            return self._cache[1]
        rng = np.random.default_rng([self.seed, b, 0x51])
        cycles = np.arange(b * BLOCK, (b + 1) * BLOCK, dtype=np.int64)
        patterns, pidx, rates = self._pattern_rates(cycles)
        u = rng.random((BLOCK, self.n_src))
        src_rate = np.empty((BLOCK, self.n_src))
        src_rate[:, :self.n_cores] = rates[:, None]
        if self.n_mem:
            mem_rate = np.minimum(1.0, rates * self.spec.mem_fraction * self.n_cores / self.n_mem)
            src_rate[:, self.n_cores:] = mem_rate[:, None]
        if self._transpose is not None:
            fixed = self._transpose == np.arange(self.n_cores)
            for k, pat in enumerate(patterns):
                if pat == "transpose":
                    rows = pidx == k
                    src_rate[np.ix_(rows, np.nonzero(fixed)[0])] = 0.0
        row, src = np.nonzero(u < src_rate)
        n = len(row)
        u_dst = rng.random(n)
        u_mem = rng.random(n)
        u_hot = rng.random(n)
        u_slot = rng.random(n)
        dst = np.empty(n, dtype=np.int64)
        is_mem_src = src >= self.n_cores
        # uniform over cores other than the source (memory sources: any core)
        span = np.where(is_mem_src, self.n_cores, self.n_cores - 1)
        d = np.minimum((u_dst * span).astype(np.int64), span - 1)
        d = np.where(~is_mem_src & (d >= src), d + 1, d)
        dst[:] = d
        core = ~is_mem_src
        pat_of = np.asarray(pidx[row])
        for k, pat in enumerate(patterns):
            sel = core & (pat_of == k)
            if pat == "transpose":
                dst[sel] = self._transpose[src[sel]]
            elif pat == "hotspot" and self._hot_nodes is not None:
                hot = sel & (u_hot < self.spec.hotspot_fraction)
                pick = np.searchsorted(self._hot_cdf, u_dst[hot] * 0.999999999, side="right")
                cand = self._hot_nodes[np.minimum(pick, len(self._hot_nodes) - 1)]
                keep = cand != src[hot]
                hidx = np.nonzero(hot)[0][keep]
                dst[hidx] = cand[keep]
        if self.n_mem:
            to_mem = core & (u_mem < self.spec.mem_fraction)
            dst[to_mem] = self.n_cores + np.minimum(
                (u_slot[to_mem] * self.n_mem).astype(np.int64), self.n_mem - 1)
        out = (cycles[row], src.astype(np.int64), dst)
        self._cache = (b, out)
        return out

    def generate(self, c0: int, c1: int):
        """Injections with c0 <= cycle < c1 as (cycle, src, dst) arrays."""
        if c1 <= c0:
            e = np.zeros(0, dtype=np.int64)
            return e, e.copy(), e.copy()
        parts = [[], [], []]
        for b in range(c0 // BLOCK, (c1 - 1) // BLOCK + 1):
            cyc, src, dst = self._block(b)
            sel = (cyc >= c0) & (cyc < c1)
            parts[0].append(cyc[sel])
            parts[1].append(src[sel])
            parts[2].append(dst[sel])
        return tuple(np.concatenate(p) for p in parts)

    def next_injections(self, cycle: int) -> list:
        cyc, src, dst = self.generate(cycle, cycle + 1)
        return [(int(s), int(d), self.packet_bits) for s, d in zip(src, dst)]


def next_injections(generator: TrafficGenerator, cycle: int) -> list:
    return generator.next_injections(cycle)


# -- traces ------------------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    inject_cycle: int
    src: int
    dst: int
    bits: int


def load_trace(path, n_nodes: int | None = None) -> Iterator[TraceRecord]:
    """Stream records from a ``cycle src dst bits`` text trace."""
    last = -1
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise TraceError(f"expected 4 fields, got {len(parts)}", lineno)
            try:
                cyc, src, dst, bits = (int(p) for p in parts)
            except ValueError:
                raise TraceError(f"non-integer field in {line!r}", lineno) from None
            if cyc < 0 or bits <= 0:
                raise TraceError("cycle must be >= 0 and bits > 0", lineno)
            if cyc < last:
                raise TraceError(f"records not sorted by cycle ({cyc} after {last})", lineno)
            if n_nodes is not None:
                for nid in (src, dst):
                    if not 0 <= nid < n_nodes:
                        raise TraceError(f"node id {nid} outside [0, {n_nodes})", lineno)
            if src == dst:
                raise TraceError("source equals destination", lineno)
            last = cyc
            yield TraceRecord(cyc, src, dst, bits)


def write_trace(path, records) -> None:
    with open(path, "w") as fh:
        fh.write("# cycle src dst bits\n")
        for r in records:
            fh.write(f"{r.inject_cycle} {r.src} {r.dst} {r.bits}\n")


class TraceTraffic:
    """Feeds a trace file to the engine; payloads round up to whole packets."""

    def __init__(self, path, topology, packet_bits: int):
        self.packet_bits = packet_bits
        self.n_cores = topology.n_routers
        self._it = load_trace(path, topology.n_nodes)
        self._pending: TraceRecord | None = None
        self._done = False
        self._cursor = 0

    def _next(self):
        if self._pending is None and not self._done:
            self._pending = next(self._it, None)
            if self._pending is None:
                self._done = True
        return self._pending

    def generate(self, c0: int, c1: int):
        if c0 < self._cursor:
            raise TrafficError("trace traffic can only move forward")
        self._cursor = c1
        cyc, src, dst = [], [], []
        while True:
            rec = self._next()
            if rec is None or rec.inject_cycle >= c1:
                break
            self._pending = None
            if rec.inject_cycle < c0:
                continue
            if rec.src >= self.n_cores and rec.dst >= self.n_cores:
                raise TrafficError("memory-to-memory records are not routable")
            for _ in range(math.ceil(rec.bits / self.packet_bits)):
                cyc.append(rec.inject_cycle)
                src.append(rec.src)
                dst.append(rec.dst)
        a = [np.asarray(x, dtype=np.int64) for x in (cyc, src, dst)]
        order = np.lexsort((a[1], a[0]))
        return tuple(x[order] for x in a)
