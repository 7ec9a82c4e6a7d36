import math

import numpy as np
import pytest
from scipy import stats

from irsopt.channel import (
    BLOCK_SIZE,
    ConfigError,
    InvalidGeometryError,
    LinkGeometry,
    SystemConfig,
    iter_channel_blocks,
    link_stats,
    sample_channels,
    sample_realization,
)
from conftest import scenario_system


def test_link_stats_unit_rayleigh():
    s = link_stats(LinkGeometry(1.0, 4.0, 0.0))
    assert s.mean == 0.0
    assert s.variance == 1.0


def test_link_stats_unit_rician():
    s = link_stats(LinkGeometry(1.0, 4.0, 3.0))
    assert s.mean == pytest.approx(math.sqrt(0.75), abs=1e-15)
    assert s.variance == pytest.approx(0.25, abs=1e-15)


def test_link_stats_rd_geometry():
    d = math.dist((0.0, 10.0), (90.0, 0.0))
    assert d == pytest.approx(math.sqrt(8200))
    s = link_stats(LinkGeometry(d, 4.0, 20.0))
    assert s.variance == pytest.approx(d**-4 / 21, rel=1e-14)
    assert s.mean == pytest.approx(d**-2 * math.sqrt(20 / 21), rel=1e-14)
    assert s.power == pytest.approx(d**-4, rel=1e-14)


@pytest.mark.parametrize(
    "args", [(0.0, 4.0, 1.0), (-1.0, 4.0, 1.0), (1.0, 0.0, 1.0), (1.0, 4.0, -0.1), (float("nan"), 4.0, 1.0)]
)
def test_bad_geometry(args):
    with pytest.raises(InvalidGeometryError):
        LinkGeometry(*args)


@pytest.mark.parametrize(
    "changes", [{"M": 0}, {"N": 0}, {"bits": 0}, {"alpha": 0.0}, {"alpha": 1.5}, {"snr": 0.0}, {"N": 2.5}]
)
def test_bad_system(changes):
    with pytest.raises(ConfigError):
        scenario_system().replace(**changes)


def test_realization_shapes_and_determinism():
    cfg = scenario_system(M=3, N=5)
    a = sample_realization(cfg, 7)
    b = sample_realization(cfg, 7)
    c = sample_realization(cfg, 8)
    assert a.h_sd.shape == (3,) and a.H_sr.shape == (3, 5) and a.h_rd.shape == (5,)
    for x, y in ((a.h_sd, b.h_sd), (a.H_sr, b.H_sr), (a.h_rd, b.h_rd)):
        assert x.tobytes() == y.tobytes()
    assert not np.array_equal(a.H_sr, c.H_sr)


def test_partial_blocks_are_prefixes():
    cfg = scenario_system(M=2, N=3)
    full = sample_channels(cfg, BLOCK_SIZE + 10, 3)
    short = sample_channels(cfg, 100, 3)
    np.testing.assert_array_equal(full.H_sr[:100], short.H_sr)
    tail = sample_channels(cfg, BLOCK_SIZE + 5, 3)
    np.testing.assert_array_equal(full.h_rd[: BLOCK_SIZE + 5], tail.h_rd)
    assert sum(len(b) for b in iter_channel_blocks(cfg, 2 * BLOCK_SIZE + 1, 0)) == 2 * BLOCK_SIZE + 1


def test_sample_count_validation():
    with pytest.raises(ConfigError):
        list(iter_channel_blocks(scenario_system(), 0, 0))


def test_direct_link_mean_and_variance():
    cfg = scenario_system(M=1, N=1)
    batch = sample_channels(cfg, 1_000_000, 11)
    h = batch.h_sd[:, 0]
    sd = cfg.sd
    tol = 4 * math.sqrt(sd.variance / 2) / 1000
    assert abs(h.real.mean() - sd.mean) < tol
    assert abs(h.imag.mean()) < tol
    g = batch.H_sr[:, 0, 0]
    assert np.var(g) == pytest.approx(cfg.sr.variance, rel=0.02)


def test_envelope_follows_noncentral_chi2():
    cfg = scenario_system(M=1, N=1)
    h = sample_channels(cfg, 50_000, 5).h_rd[:, 0]
    st = cfg.rd
    # 2|h|^2 / var ~ noncentral chi2 with 2 dof and noncentrality 2 mu^2 / var
    x = 2 * np.abs(h) ** 2 / st.variance
    res = stats.kstest(x, stats.ncx2(2, 2 * st.mean**2 / st.variance).cdf)
    assert res.pvalue > 1e-3
