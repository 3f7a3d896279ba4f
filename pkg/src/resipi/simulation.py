"""Experiment orchestration: presets, warm-up, intervals, reconfiguration.

The engine runs uninterrupted between interval boundaries. At each boundary
the controller's plan is executed step by step (drain, laser, couplers,
activation), and the power integrator sees every change as it happens.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig, config_to_text
from .controller import GatewayController, Thresholds
from .engine import Engine
from .metrics import (LatencyAccumulator, PowerIntegrator, ReconfigEvent, ResidencyMap,
                      RunLog, finalize_interval)
from .photonic import InterposerState, ReconfigurationInFlight
from .selection import build_selection_table
from .topology import build_topology
from .traffic import TraceTraffic, TrafficGenerator

WDM_LABEL = "wdm-scaling (approximation of PROWAVES)"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    mode: str  # dynamic | static | wdm
    overrides: dict = field(default_factory=dict)
    static_g: int | None = None  # None: all gateways
    label: str = ""

    def apply(self, cfg: SystemConfig) -> SystemConfig:
        return cfg.with_overrides(**self.overrides).validate() if self.overrides else cfg

    @property
    def display(self) -> str:
        return self.label or self.name


PRESETS = {
    "resipi-dynamic": ExperimentPreset("resipi-dynamic", "dynamic"),
    "static-all": ExperimentPreset("static-all", "static"),
    "static-min": ExperimentPreset("static-min", "static", static_g=1),
    "wdm-scaling": ExperimentPreset(
        "wdm-scaling", "wdm", {"max_gateways_per_chiplet": 1, "gw_buffer_flits": 32},
        label=WDM_LABEL),
}


def get_preset(name) -> ExperimentPreset:
    """Preset by name; ``static-<g>`` pins every chiplet at g gateways."""
    if isinstance(name, ExperimentPreset):
        return name
    if name in PRESETS:
        return PRESETS[name]
    if name.startswith("static-"):
        try:
            g = int(name[len("static-"):])
        except ValueError:
            g = 0
        if g >= 1:
            return ExperimentPreset(name, "static", static_g=g)
    raise SimulationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)} or static-<g>")


def expand_preset(cfg: SystemConfig, name) -> SystemConfig:
    return get_preset(name).apply(cfg)


class Simulation:
    def __init__(self, cfg: SystemConfig, preset="resipi-dynamic", kernel=None,
                 log_capacity: int = 0):
        self.preset = get_preset(preset)
        self.cfg = cfg = self.preset.apply(cfg)
        cfg.validate()
        self.topo = topo = build_topology(cfg)
        self.table = build_selection_table(cfg.mesh_rows, cfg.mesh_cols, topo.placement)
        tspec = cfg.traffic
        if tspec.pattern == "trace":
            traffic = TraceTraffic(tspec.trace_path, topo, cfg.packet_bits)
        else:
            # phases are timed from the end of warm-up so they line up with intervals
            traffic = TrafficGenerator(tspec, topo, cfg.packet_bits, cfg.seed,
                                       start_cycle=cfg.warmup)
        G, C = topo.gateways_per_chiplet, topo.num_chiplets
        mode = self.preset.mode
        if mode == "wdm":
            self.wavelengths = [cfg.max_wavelengths] * topo.n_gateways
        else:
            self.wavelengths = [cfg.wavelengths] * topo.n_gateways
        if mode == "static" and self.preset.static_g is not None:
            if not 1 <= self.preset.static_g <= G:
                raise SimulationError(f"static g={self.preset.static_g} outside [1, {G}]")
            g0 = self.preset.static_g
        else:
            g0 = G
        self.engine = Engine(cfg, topo, self.table, traffic, kernel=kernel,
                             log_capacity=log_capacity, wavelengths=self.wavelengths)
        on = [True] * topo.n_gateways
        for gw in topo.gateways:
            if gw.chiplet >= 0 and gw.index >= g0:
                on[gw.gid] = False
                self.engine.set_gateway(gw.gid, on=False)
        self.interposer = InterposerState(topo.n_gateways, self.wavelengths, cfg.power,
                                          cfg.noc_freq_ghz, active=on)
        T = cfg.interval_cycles
        if mode == "dynamic":
            self.controller = GatewayController(C, Thresholds(cfg.L_m, G), T,
                                                mem_gateways=topo.mem_gateways)
        elif mode == "wdm":
            # load per wavelength against L_m spread over the base wavelength count
            self.controller = GatewayController(
                C, Thresholds(cfg.L_m / cfg.wavelengths, cfg.max_wavelengths), T,
                mem_gateways=topo.mem_gateways)
        else:
            self.controller = None
        self.g = [g0] * C
        self.integrator = PowerIntegrator(cfg.noc_freq_ghz)
        self.events: list = []

    # -- views ---------------------------------------------------------------

    @property
    def mode(self) -> str:
        return self.preset.mode

    def powered(self) -> list:
        return [bool(x) for x in self.engine.a["gw_on"]]

    def power(self):
        return self.interposer.power(self.powered())

    def chiplet_wavelengths(self) -> list:
        G = self.topo.gateways_per_chiplet
        return [self.wavelengths[c * G] for c in range(self.topo.num_chiplets)]

    def gt(self) -> int:
        return sum(self.powered())

    # -- running -------------------------------------------------------------

    def _advance(self, until: int, stop_when_drained: bool = False) -> int:
        return self.engine.run(until, stop_when_drained)

    def _power_changed(self) -> None:
        self.integrator.change(self.engine.cycle, self.power())

    def run(self, cycles: int | None = None, warmup: int | None = None,
            interval: int | None = None) -> RunLog:
        cfg = self.cfg
        cycles = cfg.cycles if cycles is None else cycles
        warmup = cfg.warmup if warmup is None else warmup
        T = cfg.interval_cycles if interval is None else interval
        if T <= 0 or cycles < 0 or warmup < 0:
            raise SimulationError("cycles, warmup and interval must be non-negative (interval > 0)")
        if self.controller is not None:
            self.controller.interval_len = T
            for l in self.controller.lgcs:
                l.interval_len = T
        eng = self.engine
        eng.run(warmup)
        eng.set_measure_start(warmup)
        eng.reset_accumulators()
        eng.reset_residency()
        eng.take_gateway_sent()
        base = eng.counters()
        log = RunLog(self.preset.name, self.preset.display, config_to_text(cfg),
                     kernel=eng.implementation)
        self.integrator.start(warmup, self.power())
        n = math.ceil(cycles / T) if cycles else 0
        for i in range(n):
            t0 = warmup + i * T
            t1 = min(t0 + T, warmup + cycles)
            if i > 0 and self.controller is not None:
                self._reconfigure(t1)
            self._advance(t1)
            sent = eng.take_gateway_sent()
            per_chip = self._per_chiplet(sent)
            loads = self._loads(per_chip, t1 - t0)
            if self.controller is not None:
                for c, p in enumerate(per_chip):
                    self.controller.record_packets(c, int(p))
                for l in self.controller.lgcs:
                    l.interval_len = t1 - t0
            lat = LatencyAccumulator()
            lat.absorb(eng.accumulators())
            eng.reset_accumulators()
            stats = finalize_interval(i, t0, t1, lat, self.integrator, self.g, self.gt(),
                                      loads, self.chiplet_wavelengths(), self.preset.display)
            log.intervals.append(stats)
        log.events = list(self.events)
        log.residency = ResidencyMap(self.topo, *eng.residency())
        end = eng.counters()
        log.totals = {
            "generated": end["generated"] - base["generated"],
            "delivered_all": end["delivered"] - base["delivered"],
            "flits_injected": end["flits_injected"],
            "flits_delivered": end["flits_delivered"],
            "flits_in_flight": eng.in_flight_flits(),
            "kernel": eng.implementation,
        }
        return log

    def _per_chiplet(self, sent) -> list:
        G, C = self.topo.gateways_per_chiplet, self.topo.num_chiplets
        return [int(sent[c * G:(c + 1) * G].sum()) for c in range(C)]

    def _loads(self, per_chip, length) -> list:
        if self.mode == "wdm":
            units = self.chiplet_wavelengths()
        else:
            units = self.g
        return [p / (length * u) for p, u in zip(per_chip, units)]

    # -- reconfiguration -----------------------------------------------------

    def _reconfigure(self, t_end: int) -> None:
        now = self.engine.cycle
        before_gt = self.gt()
        plan = self.controller.end_of_interval(now)
        if plan.deferred:
            self.events.append(ReconfigEvent(now, "deferred", plan.before, plan.before,
                                             before_gt, before_gt))
            return
        if plan.empty:
            self.controller.complete(plan)
            return
        if self.mode == "wdm":
            self._execute_wdm(plan)
        else:
            self._execute_gateways(plan, t_end)
        self.controller.complete(plan)

    def _execute_wdm(self, plan) -> None:
        eng, ip = self.engine, self.interposer
        now = eng.cycle
        G = self.topo.gateways_per_chiplet
        up = any(b > a for a, b in zip(plan.before, plan.after))
        new_w = list(self.wavelengths)
        for c, w in enumerate(plan.after):
            for i in range(G):
                new_w[c * G + i] = w
        need = sum(new_w[g] * ip.model.laser_mw for g in range(ip.n) if ip.active[g])
        if up:
            ip.set_laser(need, now)
            self._power_changed()
            self._advance(now + ip.laser_cycles)
        for g, w in enumerate(new_w):
            ip.set_wavelengths(g, w)
        self.wavelengths = new_w
        eng.set_wavelengths(new_w)
        self._power_changed()
        if not up:
            ip.set_laser(need, eng.cycle)
            self._power_changed()
        self.events.append(ReconfigEvent(now, "plan", plan.before, plan.after,
                                         sum(plan.before), sum(plan.after)))

    def _execute_gateways(self, plan, t_end: int) -> None:
        eng, ip, topo = self.engine, self.interposer, self.topo
        cfg = self.cfg
        start = eng.cycle
        gt_before = self.gt()
        after = list(plan.after)
        drain_cycles = 0
        for action, payload in plan.steps:
            now = eng.cycle
            if action == "drain":
                gids = [topo.gateway_id(c, i) for c, i in payload]
                for g in gids:
                    eng.set_gateway(g, accepting=False)
                    eng.a["draining"][g] = 1
                limit = min(now + cfg.drain_timeout, t_end)
                self._advance(limit, stop_when_drained=True)
                drain_cycles = eng.cycle - now
                stuck = []
                for (c, i), g in zip(payload, gids):
                    eng.a["draining"][g] = 0
                    busy = (eng.a["gw_fill"][g] or eng.a["rdq_cnt"][g] or eng.a["tx_pid"][g] >= 0)
                    if busy:
                        stuck.append((c, i))
                        eng.set_gateway(g, accepting=True)
                if stuck:
                    chips = sorted({c for c, _ in stuck})
                    self.controller.postpone(chips)
                    for c in chips:
                        after[c] = self.controller.lgcs[c].g_c
                    self.events.append(ReconfigEvent(eng.cycle, "drain-timeout", plan.before,
                                                     tuple(after), gt_before, gt_before,
                                                     drain_cycles=drain_cycles))
                    payload[:] = [p for p in payload if p not in stuck]
            elif action == "deactivate":
                for c, i in payload:
                    eng.set_gateway(topo.gateway_id(c, i), on=False)
                self._power_changed()
            elif action == "laser-up":
                target = self._target_mask(after)
                ip.set_laser(ip.required_laser_mw(target), now)
                self._power_changed()
                self._advance(now + ip.laser_cycles)
            elif action == "retune":
                target = self._target_mask(after)
                if target == ip.active:
                    continue
                try:
                    sched = ip.apply_reconfiguration(target, now, retune_laser=False)
                except ReconfigurationInFlight:  # pragma: no cover - plans never overlap
                    raise SimulationError("coupler reconfiguration overlapped a previous one")
                for g in sched.affected_gateways:
                    if target[g]:
                        eng.set_gateway(g, busy_until=sched.pcmc_busy_until)
                if sched.changed_pcmcs:
                    self.integrator.add_reconfig(sched.energy_nj)
                self.events.append(ReconfigEvent(
                    now, "plan", plan.before, tuple(after), gt_before, sum(target),
                    len(sched.changed_pcmcs), sched.energy_nj,
                    tuple(g for g in sched.affected_gateways if target[g]),
                    sched.pcmc_busy_until, drain_cycles))
            elif action == "activate":
                for c, i in payload:
                    g = topo.gateway_id(c, i)
                    eng.set_gateway(g, on=True, accepting=True)
                self._power_changed()
            elif action == "laser-down":
                target = self._target_mask(after)
                ip.set_laser(ip.required_laser_mw(target), now)
                self._power_changed()
        self.g = after
        if eng.cycle < start:  # pragma: no cover
            raise SimulationError("time moved backwards during reconfiguration")

    def _target_mask(self, g_after) -> list:
        topo = self.topo
        mask = []
        for gw in topo.gateways:
            mask.append(True if gw.chiplet < 0 else gw.index < g_after[gw.chiplet])
        return mask


def run_experiment(cfg: SystemConfig, preset="resipi-dynamic", kernel=None, **kw) -> RunLog:
    return Simulation(cfg, preset, kernel=kernel).run(**kw)


def residency_grid(log: RunLog, chiplet: int) -> np.ndarray:
    topo = log.residency.topo
    out = np.full((topo.rows, topo.cols), np.nan)
    for r, chip, row, col, _, _, v in log.residency.rows():
        if chip == chiplet and v is not None:
            out[row, col] = v
    return out
