from __future__ import annotations

import pytest

from resipi.metrics import (LatencyAccumulator, MetricsError, PowerIntegrator, export,
                            read_intervals_csv, summarize_rows)
from resipi.photonic import PowerBreakdown
from resipi.simulation import Simulation

from conftest import small_config


def test_latency_examples():
    acc = LatencyAccumulator()
    assert acc.average is None
    assert acc.record_delivery(100, 160) == 60
    acc = LatencyAccumulator()
    acc.record_delivery(0, 10)
    acc.record_delivery(5, 35)
    assert acc.average == 20
    with pytest.raises(MetricsError):
        acc.record_delivery(10, 9)


def test_integrator_piecewise_energy():
    pi = PowerIntegrator(1.0)
    pi.start(0, PowerBreakdown(laser_mw=100.0))
    pi.change(400, PowerBreakdown(laser_mw=50.0, controller_mw=1.0))
    pi.add_reconfig(4.0)
    mean, mj, nj, ev = pi.close(1000)
    # 100 mW for 400 ns, 51 mW for 600 ns, plus 4 nJ
    assert mj == pytest.approx((100 * 400 + 51 * 600) * 1e-9 + 4e-6, rel=1e-12)
    assert mean.laser_mw == pytest.approx(70.0) and (nj, ev) == (4.0, 1)
    with pytest.raises(MetricsError):
        pi.change(10, PowerBreakdown())


@pytest.fixture(scope="module")
def dynamic_log():
    return Simulation(small_config(rate=0.002)).run()


def test_energy_is_additive(dynamic_log):
    log = dynamic_log
    assert log.energy_mj == pytest.approx(sum(s.energy_mj for s in log.intervals), rel=1e-9)
    for s in log.intervals:
        static = s.power.total_mw * (s.end - s.start) * 1e-9
        assert s.energy_mj == pytest.approx(static + s.reconfig_energy_nj * 1e-6, rel=1e-9)


def test_csv_round_trip(dynamic_log, tmp_path):
    paths = export(dynamic_log, tmp_path)
    rows = read_intervals_csv(paths["intervals"])
    assert len(rows) == len(dynamic_log.intervals)
    again = summarize_rows(rows)
    want = dynamic_log.summary()
    for k in ("delivered", "avg_latency", "energy_mj", "reconfig_energy_nj", "mean_total_mw"):
        assert again[k] == pytest.approx(want[k], rel=1e-12)
    assert all(r["mode"] == "resipi-dynamic" for r in rows)


def test_delivered_and_power_floor(dynamic_log):
    log = dynamic_log
    assert sum(s.delivered for s in log.intervals) == log.latency.count
    assert all(s.power.total_mw >= 0.959 for s in log.intervals)


def test_residency_absent_without_traffic(tmp_path):
    cfg = small_config(rate=0.0)
    log = Simulation(cfg, "static-all").run()
    assert all(v is None for v in log.residency.values())
    assert log.residency.max_router() == (None, None)
    assert all(s.avg_latency is None for s in log.intervals)
    text = (export(log, tmp_path)["summary"])
    assert "avg_latency: absent" in open(text).read()


def test_single_gateway_hotspot_is_the_gateway_router():
    # below saturation the gateway buffer wait makes the gateway router the hotspot
    log = Simulation(small_config(rate=0.001), "static-min").run()
    r, v = log.residency.max_router()
    topo = log.residency.topo
    assert r in {g.router for g in topo.gateways if g.index == 0}
    visited = [x for x in log.residency.values() if x is not None]
    assert min(visited) >= 1.0


def test_unwritable_output(dynamic_log, tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("x")
    with pytest.raises(MetricsError):
        export(dynamic_log, blocker / "sub")
