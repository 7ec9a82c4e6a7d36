import numpy as np
import pytest

from irsopt.channel import LinkGeometry, SystemConfig
from irsopt.experiments import Scenario


def scenario_system(M=4, N=20, bits=3, snr_db=73.0, alpha=1.0, rayleigh=False) -> SystemConfig:
    scen = Scenario(M=M, N=N, bits=bits, snr_db=snr_db, alpha=alpha)
    if rayleigh:
        scen.rice = {"sd": 0.0, "sr": 0.0, "rd": 0.0}
    return scen.system()


def unit_system(M=1, N=1, K=(0.0, 0.0, 0.0), alpha=1.0, snr=1.0) -> SystemConfig:
    sd, sr, rd = (LinkGeometry(1.0, 4.0, k) for k in K)
    return SystemConfig.from_geometry(M, N, 1, alpha, snr, sd, sr, rd)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def paper_system():
    return scenario_system()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(lines):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
