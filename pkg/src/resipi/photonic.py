"""Photonic interposer power model.

PCM couplers (PCMCs) split the laser feed along a chain so that every active
writer MRG receives the same optical power; idle MRG inputs are power-gated by
driving their coupler fully crystalline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

PCMC_RECONFIG_NS = 100.0
LASER_TUNE_NS = 0.05


class PhotonicError(ValueError):
    pass


class ReconfigurationInFlight(RuntimeError):
    """A reconfiguration was requested before the previous one finished."""


@dataclass(frozen=True)
class PowerModel:
    laser_mw: float = 30.0  # per wavelength per waveguide
    tia_mw: float = 2.0
    tuning_mw: float = 3.0  # per powered MR
    driver_mw: float = 3.0
    controller_uw: float = 959.0
    pcm_reconfig_nj: float = 2.0
    wall_plug_efficiency: float = 1.0

    def __post_init__(self):
        for name in ("laser_mw", "tia_mw", "tuning_mw", "driver_mw",
                     "controller_uw", "pcm_reconfig_nj"):
            if getattr(self, name) < 0:
                raise PhotonicError(f"power constant {name} must be non-negative")
        if not 0 < self.wall_plug_efficiency <= 1:
            raise PhotonicError("wall_plug_efficiency must lie in (0, 1]")

    @property
    def controller_mw(self) -> float:
        return self.controller_uw / 1000.0


@dataclass
class PCMCState:
    kappa: float = 0.0
    target_kappa: float = 0.0
    busy_until: int = 0

    def __post_init__(self):
        if not 0 <= self.kappa <= 1:
            raise PhotonicError(f"kappa {self.kappa} outside [0, 1]")


@dataclass
class LaserState:
    output_power_mw_per_waveguide: float = 0.0
    wall_power_efficiency: float = 1.0
    busy_until: int = 0
    # total optical output, all waveguides and wavelengths
    output_mw: float = 0.0


@dataclass
class PowerBreakdown:
    laser_mw: float = 0.0
    tuning_mw: float = 0.0
    tia_mw: float = 0.0
    driver_mw: float = 0.0
    controller_mw: float = 0.0
    reconfig_energy_nj: float = 0.0

    @property
    def total_mw(self) -> float:
        return (self.laser_mw + self.tuning_mw + self.tia_mw
                + self.driver_mw + self.controller_mw)

    def as_dict(self) -> dict:
        return {
            "laser_mw": self.laser_mw,
            "tuning_mw": self.tuning_mw,
            "tia_mw": self.tia_mw,
            "driver_mw": self.driver_mw,
            "controller_mw": self.controller_mw,
            "total_mw": self.total_mw,
        }


def pcmc_split(kappa, p_in):
    """Return (cross, bar) output power of a lossless coupler."""
    if not 0 <= kappa <= 1:
        raise PhotonicError(f"coupling ratio {kappa} outside [0, 1]")
    if p_in < 0:
        raise PhotonicError("input power must be non-negative")
    p_cross = kappa * p_in
    return p_cross, p_in - p_cross


def coupling_ratios(active: Sequence[bool], exact: bool = False) -> list:
    """Coupling ratio for each of the N-1 PCMCs of the chain.

    The j-th active tap along the chain (0-based) takes 1/(GT - j) of what
    reaches it, so every active MRG input gets P/GT. MRG_N hangs off the last
    Bar port and is the final tap. With ``exact`` the ratios are Fractions.
    """
    n = len(active)
    if n < 2:
        raise PhotonicError("a PCMC chain needs at least two gateways")
    total = sum(1 for a in active if a)
    if total == 0:
        raise PhotonicError("at least one gateway must be active")
    one = Fraction(1) if exact else 1.0
    ratios = []
    served = 0
    for k in range(n - 1):
        if active[k]:
            ratios.append(one / (total - served))
            served += 1
        else:
            ratios.append(one * 0)
    return [min(max(r, 0 * one), one) for r in ratios]


def propagate_chain(ratios: Sequence, p_laser):
    """Walk the laser feed down the chain.

    Returns (per-MRG input power, power left on the last Bar port that does not
    reach an active MRG). The last MRG's input is the final Bar output.
    """
    powers = []
    p = p_laser
    for kappa in ratios:
        cross, p = pcmc_split(kappa, p)
        powers.append(cross)
    powers.append(p)
    return powers


def mrg_input_powers(active: Sequence[bool], p_laser, exact: bool = False):
    """Input power at every MRG plus the unused terminal power."""
    ratios = coupling_ratios(active, exact=exact)
    powers = propagate_chain(ratios, p_laser)
    terminal = 0 * p_laser
    if not active[-1]:
        terminal = powers[-1]
        powers[-1] = 0 * p_laser
    return powers, terminal


def laser_power_required(gt: int, wavelengths: int, model: PowerModel) -> float:
    """Laser budget: every active writer drives its own SWMR waveguide."""
    if gt < 0:
        raise PhotonicError("active gateway count must be non-negative")
    return wavelengths * model.laser_mw * gt / model.wall_plug_efficiency


def _per_gateway(wavelengths, n):
    if isinstance(wavelengths, int):
        return [wavelengths] * n
    w = list(wavelengths)
    if len(w) != n:
        raise PhotonicError("wavelength list length must match the gateway count")
    return w


def network_power(active: Sequence[bool], wavelengths, model: PowerModel,
                  readers: Sequence[bool] | None = None,
                  laser_mw: float | None = None) -> PowerBreakdown:
    """Static power of the interposer for one activation state.

    ``wavelengths`` is a count shared by all gateways or one count per
    gateway. Writers power W modulators (tuned and driven); each active
    reader tunes and detects the W channels of every other active writer.
    ``laser_mw`` overrides the laser level while it leads or lags activation.
    """
    n = len(active)
    w = _per_gateway(wavelengths, n)
    readers = active if readers is None else readers
    writer_lambdas = sum(w[g] for g in range(n) if active[g])
    modulators = writer_lambdas
    filters = 0
    for r in range(n):
        if readers[r]:
            filters += writer_lambdas - (w[r] if active[r] else 0)
    if laser_mw is None:
        laser_mw = writer_lambdas * model.laser_mw / model.wall_plug_efficiency
    return PowerBreakdown(
        laser_mw=laser_mw,
        tuning_mw=model.tuning_mw * (modulators + filters),
        tia_mw=model.tia_mw * filters,
        driver_mw=model.driver_mw * modulators,
        controller_mw=model.controller_mw,
    )


def reconfig_cycles(ns: float, freq_ghz: float) -> int:
    return max(1, math.ceil(round(ns * freq_ghz, 9)))


@dataclass
class ReconfigSchedule:
    now: int
    changed_pcmcs: list = field(default_factory=list)
    pcmc_busy_until: int = 0
    laser_busy_until: int = 0
    energy_nj: float = 0.0
    affected_gateways: list = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.changed_pcmcs and self.laser_busy_until <= self.now


class InterposerState:
    """Mutable coupler and laser state of the interposer."""

    def __init__(self, n_gateways: int, wavelengths, model: PowerModel,
                 freq_ghz: float = 1.0, active: Sequence[bool] | None = None):
        if n_gateways < 2:
            raise PhotonicError("interposer needs at least two gateways")
        self.n = n_gateways
        self.wavelengths = _per_gateway(wavelengths, n_gateways)
        self.model = model
        self.pcmc_cycles = reconfig_cycles(PCMC_RECONFIG_NS, freq_ghz)
        self.laser_cycles = reconfig_cycles(LASER_TUNE_NS, freq_ghz)
        self.pcmcs = [PCMCState() for _ in range(n_gateways - 1)]
        self.laser = LaserState(wall_power_efficiency=model.wall_plug_efficiency)
        self.active = [False] * n_gateways
        self.reconfig_energy_nj = 0.0
        if active is not None:
            self.active = list(active)
            for p, k in zip(self.pcmcs, coupling_ratios(self.active)):
                p.kappa = p.target_kappa = k
            self.laser.output_mw = self.required_laser_mw(self.active)
            self.laser.output_power_mw_per_waveguide = self._per_waveguide()

    def required_laser_mw(self, active) -> float:
        return sum(self.wavelengths[g] * self.model.laser_mw
                   for g in range(self.n) if active[g])

    def _per_waveguide(self) -> float:
        gt = sum(self.active)
        return self.laser.output_mw / gt if gt else 0.0

    @property
    def kappas(self) -> list:
        return [p.kappa for p in self.pcmcs]

    def in_flight(self, now: int) -> bool:
        return (now < self.laser.busy_until
                or any(now < p.busy_until for p in self.pcmcs))

    def set_laser(self, output_mw: float, now: int) -> int:
        """Retune the laser; returns the cycle the new level is settled."""
        if now < self.laser.busy_until:
            raise ReconfigurationInFlight("laser still retuning")
        if output_mw < 0:
            raise PhotonicError("laser output must be non-negative")
        if output_mw != self.laser.output_mw:
            self.laser.output_mw = output_mw
            self.laser.busy_until = now + self.laser_cycles
        self.laser.output_power_mw_per_waveguide = self._per_waveguide()
        return self.laser.busy_until

    def set_wavelengths(self, gateway: int, count: int) -> None:
        self.wavelengths[gateway] = count

    def apply_reconfiguration(self, new_active: Sequence[bool], now: int,
                              retune_laser: bool = True) -> ReconfigSchedule:
        """Retune couplers (and optionally the laser) for ``new_active``."""
        if self.in_flight(now):
            raise ReconfigurationInFlight(f"reconfiguration in flight at cycle {now}")
        new_active = list(new_active)
        if len(new_active) != self.n:
            raise PhotonicError("activation mask length mismatch")
        sched = ReconfigSchedule(now=now, pcmc_busy_until=now, laser_busy_until=now)
        new_k = coupling_ratios(new_active)
        old_powers = self.mrg_powers()
        for i, (p, k) in enumerate(zip(self.pcmcs, new_k)):
            if k != p.kappa:
                sched.changed_pcmcs.append(i)
                p.target_kappa = k
                p.kappa = k
                p.busy_until = now + self.pcmc_cycles
        if sched.changed_pcmcs:
            sched.pcmc_busy_until = now + self.pcmc_cycles
            sched.energy_nj = self.model.pcm_reconfig_nj * len(sched.changed_pcmcs)
            self.reconfig_energy_nj += sched.energy_nj
        old_active = self.active
        self.active = new_active
        if retune_laser:
            sched.laser_busy_until = self.set_laser(self.required_laser_mw(new_active), now)
        affected = set(sched.changed_pcmcs)
        # MRG_N has no coupler of its own; it is disturbed when its share moves
        if sched.changed_pcmcs and (old_active[-1] or new_active[-1]):
            if self.mrg_powers()[-1] != old_powers[-1]:
                affected.add(self.n - 1)
        sched.affected_gateways = sorted(affected)
        return sched

    def mrg_powers(self) -> list:
        if not any(self.active):
            return [0.0] * self.n
        powers = propagate_chain(self.kappas, self.laser.output_mw)
        return [p if a else 0.0 for p, a in zip(powers, self.active)]

    def power(self, powered: Sequence[bool] | None = None) -> PowerBreakdown:
        powered = self.active if powered is None else powered
        pb = network_power(powered, self.wavelengths, self.model,
                           laser_mw=self.laser.output_mw / self.model.wall_plug_efficiency)
        pb.reconfig_energy_nj = self.reconfig_energy_nj
        return pb

    def snapshot(self) -> "InterposerState":
        other = InterposerState.__new__(InterposerState)
        other.__dict__.update(self.__dict__)
        other.pcmcs = [replace(p) for p in self.pcmcs]
        other.laser = replace(self.laser)
        other.active = list(self.active)
        other.wavelengths = list(self.wavelengths)
        return other
