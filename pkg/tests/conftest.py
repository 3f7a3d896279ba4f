from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from resipi.config import SystemConfig
from resipi.kernel import available


class ListTraffic:
    """Fixed (cycle, src, dst) injections for hand-built scenarios."""

    def __init__(self, records):
        self.records = sorted(records)

    def generate(self, c0, c1):
        sel = [r for r in self.records if c0 <= r[0] < c1]
        return tuple(np.array([r[i] for r in sel], dtype=np.int64) for i in range(3))


def small_config(**kw) -> SystemConfig:
    """Default system with a short run, for tests that need the full stack."""
    base = dict(cycles=20_000, warmup=1_000, interval_cycles=5_000)
    traffic = kw.pop("traffic", None)
    rate = kw.pop("rate", None)
    base.update(kw)
    cfg = SystemConfig(**base)
    if traffic is not None:
        cfg = replace(cfg, traffic=traffic)
    if rate is not None:
        cfg = replace(cfg, traffic=replace(cfg.traffic, rate=rate))
    return cfg.validate()


@pytest.fixture(params=available())
def kernel_name(request):
    return request.param


# -- acceptance report: one line per criterion at the end of the run ---------

_CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_C"):
        return
    crit = name[len("test_"):].split("_", 1)[0]
    if report.when == "call" or report.failed:
        detail = dict(report.user_properties).get("detail", "")
        if report.failed and not detail:
            detail = str(report.longrepr).splitlines()[-1][:160]
        _CRITERIA[crit] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_CRITERIA, key=lambda c: int(c[1:])):
        status, detail = _CRITERIA[crit]
        terminalreporter.write_line(f"{crit} {status}  {detail}")
