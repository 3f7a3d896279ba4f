from __future__ import annotations

from dataclasses import replace

import pytest

from resipi.config import SystemConfig, config_diff
from resipi.simulation import (PRESETS, WDM_LABEL, Simulation, SimulationError, expand_preset,
                               get_preset, residency_grid)
from resipi.traffic import calibrated_phases

from conftest import small_config


def test_static_all_never_reconfigures():
    cfg = small_config(rate=0.0005)
    log = Simulation(cfg, "static-all").run()
    assert log.events == [] and log.reconfig_energy_nj == 0
    assert all(s.gt == 18 for s in log.intervals)


def test_interval_count_and_warmup():
    cfg = small_config(cycles=23_000, warmup=1_000, interval_cycles=5_000)
    log = Simulation(cfg, "static-all").run()
    assert [(s.start, s.end) for s in log.intervals][-1] == (21_000, 24_000)
    assert len(log.intervals) == 5


def test_preset_overrides_are_the_only_difference():
    base = SystemConfig()
    assert config_diff(base, expand_preset(base, "wdm-scaling")) == [
        "gw_buffer_flits", "max_gateways_per_chiplet"]
    for name in ("resipi-dynamic", "static-all", "static-min"):
        assert config_diff(base, expand_preset(base, name)) == []
    assert PRESETS["wdm-scaling"].display == WDM_LABEL


def test_unknown_presets():
    with pytest.raises(SimulationError):
        get_preset("static-x")
    with pytest.raises(SimulationError):
        get_preset("prowaves")
    with pytest.raises(SimulationError):
        Simulation(small_config(), "static-7")


def test_bandwidth_is_matched():
    dyn = Simulation(small_config(), "resipi-dynamic")
    wdm = Simulation(small_config(), "wdm-scaling")
    peak = lambda s: sum(w for w, gw in zip(s.wavelengths, s.topo.gateways) if gw.chiplet == 0)
    assert peak(dyn) == peak(wdm) == 16


def test_same_seed_same_bytes(tmp_path):
    from resipi.metrics import export
    cfg = small_config(rate=0.002)
    outs = []
    for k in range(2):
        paths = export(Simulation(cfg).run(), tmp_path / str(k))
        outs.append([open(p, "rb").read() for p in paths.values()])
    assert outs[0] == outs[1]


def test_idle_modes_settle_to_minimum():
    # one step per interval: 16 wavelengths need 15 boundaries to reach 1
    cfg = small_config(rate=0.0, cycles=90_000)
    dyn = Simulation(cfg).run()
    wdm = Simulation(cfg, "wdm-scaling").run()
    assert dyn.intervals[-1].g == (1, 1, 1, 1)
    assert wdm.intervals[-1].wavelengths == (1, 1, 1, 1)


def test_reconfiguration_cost_accounting():
    cfg = small_config(rate=0.0, cycles=30_000)
    sim = Simulation(cfg, log_capacity=0)
    log = sim.run()
    plans = [e for e in log.events if e.kind == "plan"]
    assert plans
    assert log.reconfig_energy_nj == sum(2.0 * e.changed_pcmcs for e in plans)
    for e in plans:
        assert e.busy_until - e.cycle == 100


def test_phased_run_reaches_calibrated_counts():
    cfg = small_config(cycles=150_000, warmup=2_000, interval_cycles=5_000,
                       traffic=calibrated_phases(5_000, 10))
    log = Simulation(cfg).run()
    g = [s.g for s in log.intervals]
    assert g[9] == (4, 4, 4, 4) and g[19] == (1, 1, 1, 1) and g[29] == (2, 2, 2, 2)


def test_residency_grid_shape():
    log = Simulation(small_config(rate=0.002), "static-all").run()
    grid = residency_grid(log, 0)
    assert grid.shape == (4, 4)


def test_trace_driven_run(tmp_path):
    p = tmp_path / "t.trace"
    p.write_text("# cycle src dst bits\n10 0 20 256\n15 3 64 600\n40 65 7 32\n")
    cfg = replace(small_config(cycles=5_000, warmup=0),
                  traffic=replace(SystemConfig().traffic, pattern="trace", trace_path=str(p)))
    log = Simulation(cfg, "static-all").run()
    # 600 bits round up to three 256-bit packets
    assert log.latency.count == 5
    assert log.totals["flits_in_flight"] == 0
