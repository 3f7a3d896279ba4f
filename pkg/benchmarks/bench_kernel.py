"""Time the compiled and interpreted cycle kernels on the same workload.

    python3 benchmarks/bench_kernel.py --cycles 200000 --rate 0.005
"""
from __future__ import annotations

import argparse
import time
from dataclasses import replace

from resipi import SystemConfig
from resipi.kernel import available
from resipi.simulation import Simulation


def time_run(cfg, kernel: str, cycles: int, preset: str):
    sim = Simulation(cfg, preset, kernel=kernel)
    t0 = time.perf_counter()
    sim.run(cycles=cycles, warmup=0)
    dt = time.perf_counter() - t0
    return dt, sim.engine.state_digest()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cycles", type=int, default=200_000)
    ap.add_argument("--rate", type=float, default=0.005)
    ap.add_argument("--preset", default="static-all")
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args(argv)
    cfg = SystemConfig(interval_cycles=max(1000, args.cycles), warmup=0)
    cfg = replace(cfg, traffic=replace(cfg.traffic, rate=args.rate))
    results = {}
    for k in available():
        best = min(time_run(cfg, k, args.cycles, args.preset)[0] for _ in range(args.repeat))
        results[k] = best
        print(f"{k:>7}: {best:8.3f} s  ({args.cycles / best:,.0f} cycles/s)")
    if len(results) == 2:
        digests = {k: time_run(cfg, k, min(args.cycles, 20_000), args.preset)[1] for k in results}
        print(f"speedup: {results['python'] / results['cython']:.1f}x;"
              f" end states match: {digests['python'] == digests['cython']}")
    else:
        print("compiled kernel not built; only the interpreted kernel was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
