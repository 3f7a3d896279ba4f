"""Parameter sweeps and L_m selection from sweep output."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .config import ConfigError, SystemConfig

GRID_KEYS = ("rate", "gateways", "L_m", "preset", "seed", "pattern")
ROW_COLUMNS = ("point", "preset", "gateways", "rate", "L_m", "pattern", "seed",
               "L_c", "avg_latency", "mean_power_mw", "energy_mj", "delivered")
LATENCY_SLACK = 1.10


class SweepError(ValueError):
    pass


def parse_grid(text: str) -> dict:
    """``key = v1, v2, ...`` lines; keys from GRID_KEYS."""
    grid = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = v1, v2', got {line!r}", lineno)
        key, vals = (s.strip() for s in line.split("=", 1))
        if key not in GRID_KEYS:
            raise ConfigError(f"unknown grid key {key!r}; use one of {GRID_KEYS}", lineno)
        items = [v.strip() for v in vals.split(",") if v.strip()]
        if not items:
            raise ConfigError(f"grid key {key!r} has no values", lineno)
        try:
            if key in ("rate", "L_m"):
                items = [float(v) for v in items]
            elif key in ("gateways", "seed"):
                items = [int(v) for v in items]
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        grid[key] = items
    return grid


def expand_grid(grid: dict) -> list:
    if not grid or not any(grid.values()):
        raise SweepError("empty sweep grid")
    keys = [k for k in GRID_KEYS if k in grid]
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def point_config(base: SystemConfig, point: dict):
    """(config, preset name) for one grid point."""
    cfg = base
    traffic = cfg.traffic
    if "rate" in point:
        traffic = replace(traffic, rate=point["rate"])
    if "pattern" in point:
        traffic = replace(traffic, pattern=point["pattern"])
    kw = {"traffic": traffic}
    if "L_m" in point:
        kw["L_m"] = point["L_m"]
    if "seed" in point:
        kw["seed"] = point["seed"]
    cfg = replace(cfg, **kw).validate()
    if "gateways" in point:
        preset = f"static-{point['gateways']}"
    else:
        preset = point.get("preset", "resipi-dynamic")
    return cfg, preset


def run_point(args):
    from .simulation import Simulation

    idx, base, point, kernel = args
    cfg, preset = point_config(base, point)
    sim = Simulation(cfg, preset, kernel=kernel)
    log = sim.run()
    s = log.summary()
    loads = [x for st in log.intervals for x in st.loads]
    gw = point.get("gateways", "")
    return {
        "point": idx,
        "preset": preset,
        "gateways": gw,
        "rate": cfg.traffic.rate,
        "L_m": cfg.L_m,
        "pattern": cfg.traffic.pattern,
        "seed": cfg.seed,
        "L_c": sum(loads) / len(loads) if loads else 0.0,
        "avg_latency": s["avg_latency"],
        "mean_power_mw": s["mean_total_mw"],
        "energy_mj": s["energy_mj"],
        "delivered": s["delivered"],
    }


def sweep(base: SystemConfig, grid: dict, jobs: int = 1, kernel=None) -> list:
    points = expand_grid(grid)
    work = [(i, base, p, kernel) for i, p in enumerate(points)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(run_point, work))
    else:
        rows = [run_point(w) for w in work]
    return sorted(rows, key=lambda r: r["point"])


def select_lm(rows, slack: float = LATENCY_SLACK):
    """Largest L_c among points within ``slack`` of their group's best latency.

    Groups are gateway counts; each point is compared only with points that
    run the same number of gateways. Returns (L_m, eligible rows).
    """
    groups = {}
    for r in rows:
        if r.get("avg_latency") is None:
            continue
        groups.setdefault(r.get("gateways", ""), []).append(r)
    if not groups:
        raise SweepError("no sweep point delivered any packet")
    eligible = []
    for members in groups.values():
        best = min(m["avg_latency"] for m in members)
        eligible += [m for m in members if m["avg_latency"] <= slack * best]
    lm = max(m["L_c"] for m in eligible)
    return lm, eligible


def format_rows(rows) -> str:
    lines = [",".join(ROW_COLUMNS)]
    for r in rows:
        lines.append(",".join("" if r.get(c) is None else str(r.get(c)) for c in ROW_COLUMNS))
    return "\n".join(lines) + "\n"
