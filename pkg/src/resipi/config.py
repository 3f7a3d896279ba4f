"""System configuration and the ``key = value`` config file format."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .photonic import PowerModel
from .traffic import TrafficSpec, parse_phases


class ConfigError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class SystemConfig:
    num_chiplets: int = 4
    mesh_rows: int = 4
    mesh_cols: int = 4
    max_gateways_per_chiplet: int = 4
    mem_gateways: int = 2
    wavelengths: int = 4
    datarate_gbps: float = 12.0
    noc_freq_ghz: float = 1.0
    interval_cycles: int = 100_000
    L_m: float = 0.0152
    packet_flits: int = 8
    flit_bits: int = 32
    buffer_flits: int = 4
    gw_buffer_flits: int = 8
    pipeline_depth: int = 2
    propagation_cycles: int = 1
    drain_timeout: int = 10_000
    max_wavelengths: int = 16  # wavelength-scaling baseline ceiling
    cycles: int = 1_000_000
    warmup: int = 10_000
    seed: int = 1
    power: PowerModel = field(default_factory=PowerModel)
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    # ((chiplet, index), (row, col)) pairs from gateway.<chiplet>.<idx> keys
    placements: tuple = ()

    @property
    def packet_bits(self) -> int:
        return self.packet_flits * self.flit_bits

    @property
    def n_gateways(self) -> int:
        return self.num_chiplets * self.max_gateways_per_chiplet + self.mem_gateways

    def placement_for(self, chiplet: int) -> tuple:
        pts = sorted((idx, rc) for (c, idx), rc in self.placements if c == chiplet)
        if pts and [i for i, _ in pts] != list(range(len(pts))):
            raise ConfigError(f"chiplet {chiplet}: gateway indices must be 0..G-1")
        return tuple(rc for _, rc in pts)

    def validate(self, lines: dict | None = None) -> "SystemConfig":
        """Check invariants; ``lines`` maps config keys to source line numbers."""
        checks = [
            (self.num_chiplets >= 2, "num_chiplets", "must be >= 2"),
            (self.max_gateways_per_chiplet >= 1, "max_gateways_per_chiplet", "must be >= 1"),
            (self.max_gateways_per_chiplet <= 8, "max_gateways_per_chiplet", "must be <= 8"),
            (self.wavelengths >= 1, "wavelengths", "must be >= 1"),
            (self.interval_cycles >= 1000, "interval_cycles", "must be >= 1000"),
            (self.mesh_rows >= 1, "mesh_rows", "must be positive"),
            (self.mesh_cols >= 1, "mesh_cols", "must be positive"),
            (self.mesh_rows * self.mesh_cols >= self.max_gateways_per_chiplet,
             "max_gateways_per_chiplet", "must not exceed mesh_rows x mesh_cols"),
            (self.mem_gateways >= 0, "mem_gateways", "must be >= 0"),
            (self.packet_flits >= 2, "packet_flits", "must be >= 2"),
            (self.flit_bits >= 1, "flit_bits", "must be >= 1"),
            (self.buffer_flits >= 1, "buffer_flits", "must be >= 1"),
            (self.gw_buffer_flits >= self.packet_flits, "gw_buffer_flits",
             "must hold at least one packet"),
            (self.datarate_gbps > 0, "datarate_gbps", "must be positive"),
            (self.noc_freq_ghz > 0, "noc_freq_ghz", "must be positive"),
            (self.L_m >= 0, "L_m", "must be non-negative"),
            (self.pipeline_depth >= 1, "pipeline_depth", "must be >= 1"),
            (self.propagation_cycles >= 0, "propagation_cycles", "must be >= 0"),
            (self.drain_timeout >= 1, "drain_timeout", "must be >= 1"),
            (self.max_wavelengths >= 1, "max_wavelengths", "must be >= 1"),
            (self.cycles >= 0, "cycles", "must be non-negative"),
            (self.warmup >= 0, "warmup", "must be non-negative"),
        ]
        for ok, key, msg in checks:
            if not ok:
                raise ConfigError(f"{key} {msg}", (lines or {}).get(key))
        try:
            self.traffic.validate(self.interval_cycles)
        except ValueError as exc:
            tline = min((v for k, v in (lines or {}).items() if k.startswith("traffic.")),
                        default=None)
            raise ConfigError(str(exc), tline) from None
        return self

    def with_overrides(self, **kw) -> "SystemConfig":
        return replace(self, **kw)


_POWER_KEYS = {f.name for f in fields(PowerModel)}
_TRAFFIC_KEYS = {
    "pattern": str, "rate": float, "mem_fraction": float,
    "hotspot_fraction": float, "trace": str, "phases": str,
    "hotspot_nodes": str, "hotspot_weights": str,
}


def _coerce(value: str, typ):
    if typ is bool:
        return value.lower() in ("1", "true", "yes", "on")
    if typ is int:
        return int(float(value)) if "e" in value.lower() else int(value)
    return typ(value)


def _field_types() -> dict:
    out = {}
    for f in fields(SystemConfig):
        if f.name in ("power", "traffic", "placements"):
            continue
        out[f.name] = {"int": int, "float": float}.get(f.type, str)
    return out


def parse_config_text(text: str, base: SystemConfig | None = None) -> SystemConfig:
    """Parse ``key = value`` lines onto ``base`` (defaults if omitted)."""
    base = base or SystemConfig()
    types = _field_types()
    top, power, traffic = {}, {}, {}
    placements = dict(base.placements)
    where = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        where[key] = lineno
        try:
            if key in types:
                top[key] = _coerce(value, types[key])
            elif key.startswith("power."):
                name = key[len("power."):]
                if name not in _POWER_KEYS:
                    raise ConfigError(f"unknown power key {key!r}", lineno)
                power[name] = float(value)
            elif key.startswith("traffic."):
                name = key[len("traffic."):]
                if name not in _TRAFFIC_KEYS:
                    raise ConfigError(f"unknown traffic key {key!r}", lineno)
                traffic[name] = value
            elif key.startswith("gateway."):
                parts = key.split(".")
                if len(parts) != 3:
                    raise ConfigError("gateway keys look like gateway.<chiplet>.<idx>", lineno)
                row, col = (int(v) for v in value.split(","))
                placements[(int(parts[1]), int(parts[2]))] = (row, col)
            else:
                raise ConfigError(f"unknown key {key!r}", lineno)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
    try:
        pm = replace(base.power, **power)
        tr = _traffic_from(traffic, base.traffic)
    except ValueError as exc:
        line = min((v for k, v in where.items() if k.startswith(("power.", "traffic."))),
                   default=None)
        raise ConfigError(str(exc), line) from None
    cfg = replace(base, **top, power=pm, traffic=tr,
                  placements=tuple(sorted(placements.items())))
    return cfg.validate(where)


def _traffic_from(kv: dict, base: TrafficSpec) -> TrafficSpec:
    upd = {}
    if "pattern" in kv:
        upd["pattern"] = kv["pattern"]
    for k in ("rate", "mem_fraction", "hotspot_fraction"):
        if k in kv:
            upd[k] = float(kv[k])
    if "trace" in kv:
        upd["trace_path"] = kv["trace"]
    if "phases" in kv:
        upd["phases"] = parse_phases(kv["phases"])
    if "hotspot_nodes" in kv:
        upd["hotspot_nodes"] = tuple(int(v) for v in kv["hotspot_nodes"].split(","))
    if "hotspot_weights" in kv:
        upd["hotspot_weights"] = tuple(float(v) for v in kv["hotspot_weights"].split(","))
    return replace(base, **upd)


def load_config(path, base: SystemConfig | None = None) -> SystemConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), base)


def config_to_text(cfg: SystemConfig) -> str:
    """Inverse of :func:`parse_config_text` (one key per line, sorted)."""
    lines = []
    for f in fields(SystemConfig):
        if f.name in ("power", "traffic", "placements"):
            continue
        lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    for f in fields(PowerModel):
        lines.append(f"power.{f.name} = {getattr(cfg.power, f.name)}")
    t = cfg.traffic
    lines.append(f"traffic.pattern = {t.pattern}")
    lines.append(f"traffic.rate = {t.rate}")
    lines.append(f"traffic.mem_fraction = {t.mem_fraction}")
    lines.append(f"traffic.hotspot_fraction = {t.hotspot_fraction}")
    if t.hotspot_nodes:
        lines.append("traffic.hotspot_nodes = " + ",".join(map(str, t.hotspot_nodes)))
    if t.hotspot_weights:
        lines.append("traffic.hotspot_weights = " + ",".join(map(str, t.hotspot_weights)))
    if t.phases:
        lines.append("traffic.phases = " + ", ".join(
            f"{p.pattern}:{p.rate}:{p.cycles}" for p in t.phases))
    if t.trace_path:
        lines.append(f"traffic.trace = {t.trace_path}")
    for (c, i), (r, col) in cfg.placements:
        lines.append(f"gateway.{c}.{i} = {r},{col}")
    return "\n".join(lines) + "\n"


def config_diff(a: SystemConfig, b: SystemConfig) -> list:
    """Config-file keys whose values differ between two configs."""
    da = dict(_kv(a))
    db = dict(_kv(b))
    return sorted(k for k in set(da) | set(db) if da.get(k) != db.get(k))


def _kv(cfg):
    for line in config_to_text(cfg).splitlines():
        k, v = line.split(" = ", 1)
        yield k, v

