"""Command-line experiment runner.

Exit status: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from .config import ConfigError, SystemConfig, load_config
from .metrics import MetricsError, export
from .selection import build_selection_table
from .simulation import PRESETS, Simulation, SimulationError, get_preset
from .sweep import SweepError, format_rows, parse_grid, select_lm, sweep
from .topology import TopologyError, build_topology
from .traffic import TrafficError

log = logging.getLogger("resipi")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resipi", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value config file (defaults if omitted)")
    p.add_argument("--preset", default="resipi-dynamic",
                   help=f"one of {', '.join(PRESETS)}, or static-<g>")
    p.add_argument("--cycles", type=int, help="measured cycles after warm-up")
    p.add_argument("--warmup", type=int, help="warm-up cycles excluded from statistics")
    p.add_argument("--interval", type=int, help="reconfiguration interval in cycles")
    p.add_argument("--seed", type=int)
    p.add_argument("--rate", type=float, help="override the injection rate")
    p.add_argument("--out", default="out", help="directory for reports")
    p.add_argument("--sweep", metavar="GRID", help="grid file: key = v1, v2, ... per line")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    p.add_argument("--kernel", choices=("auto", "cython", "python"), default=None)
    p.add_argument("--dump-selection-table", action="store_true",
                   help="print the gateway selection table and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    kw = {}
    for name in ("cycles", "warmup", "seed"):
        if getattr(args, name) is not None:
            kw[name] = getattr(args, name)
    if args.interval is not None:
        kw["interval_cycles"] = args.interval
    if args.rate is not None:
        kw["traffic"] = replace(cfg.traffic, rate=args.rate)
    return replace(cfg, **kw).validate() if kw else cfg


def _print_summary(summary: dict, out=None) -> None:
    out = out or sys.stdout
    for k, v in summary.items():
        out.write(f"{k}: {'absent' if v is None else v}\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        preset = get_preset(args.preset)
        grid = None
        if args.sweep:
            with open(args.sweep) as fh:
                grid = parse_grid(fh.read())
        if args.dump_selection_table:
            topo = build_topology(preset.apply(cfg))
            sys.stdout.write(build_selection_table(topo.rows, topo.cols, topo.placement).dump())
            return EXIT_OK
    except (ConfigError, TrafficError, TopologyError, SimulationError, SweepError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    try:
        if grid is not None:
            rows = sweep(cfg, grid, jobs=args.jobs, kernel=args.kernel)
            os.makedirs(args.out, exist_ok=True)
            text = format_rows(rows)
            with open(os.path.join(args.out, "sweep.csv"), "w") as fh:
                fh.write(text)
            sys.stdout.write(text)
            if any(r["gateways"] != "" for r in rows):
                lm, _ = select_lm(rows)
                sys.stdout.write(f"selected L_m (10% latency slack): {lm!r}\n")
            return EXIT_OK
        sim = Simulation(cfg, preset, kernel=args.kernel)
        log.info("running %s with the %s kernel", preset.display, sim.engine.implementation)
        run_log = sim.run()
        paths = export(run_log, args.out)
        _print_summary(run_log.summary())
        for p in paths.values():
            log.info("wrote %s", p)
        return EXIT_OK
    except (ConfigError, TrafficError, TopologyError, SweepError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (SimulationError, MetricsError, OSError, RuntimeError) as exc:
        sys.stderr.write(f"runtime error: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
