"""Rician link statistics and channel sampling for the IRS-assisted SIMO uplink.

Links are named ``sd`` (BS - user, direct), ``sr`` (BS - IRS) and ``rd``
(IRS - user). Every channel coefficient on link ``ab`` is drawn as
``CN(mu_ab, sigma_ab^2)`` with a real-valued mean (zero line-of-sight phase)
and the variance split evenly between the real and imaginary parts.

Random streams are keyed by ``(seed, block, link)`` with a Philox generator,
where a block holds :data:`BLOCK_SIZE` consecutive samples. Any slice of the
sample index space can therefore be regenerated independently, which keeps
chunked or parallel sampling identical to a serial run.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

BLOCK_SIZE = 4096
LINKS = ("sd", "sr", "rd")
_LINK_ID = {name: i for i, name in enumerate(LINKS)}


class ConfigError(ValueError):
    """Invalid scenario or dimension mismatch."""


class InvalidGeometryError(ConfigError):
    """Non-physical link geometry (distance, path-loss exponent or Rice factor)."""


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    pathloss_exponent: float
    rice_factor: float

    def __post_init__(self):
        if not (self.distance > 0):
            raise InvalidGeometryError(f"distance must be positive, got {self.distance}")
        if not (self.pathloss_exponent > 0):
            raise InvalidGeometryError(
                f"path-loss exponent must be positive, got {self.pathloss_exponent}"
            )
        if not (self.rice_factor >= 0):
            raise InvalidGeometryError(f"Rice factor must be nonnegative, got {self.rice_factor}")

    @property
    def power(self) -> float:
        """Large-scale power gain d^-beta."""
        return float(self.distance ** (-self.pathloss_exponent))


@dataclass(frozen=True)
class LinkStats:
    """First/second order statistics of one Rician link.

    ``mean`` is the (real) LoS amplitude, ``variance`` the scattered power and
    ``rice_factor`` is carried along because several second-moment terms are
    most naturally written with it.
    """

    mean: float
    variance: float
    rice_factor: float

    @property
    def power(self) -> float:
        return self.mean**2 + self.variance

    @property
    def fourth_moment(self) -> float:
        """E|h|^4 for h ~ CN(mean, variance)."""
        m2, v = self.mean**2, self.variance
        return m2 * m2 + 4.0 * m2 * v + 2.0 * v * v


def link_stats(geometry: LinkGeometry) -> LinkStats:
    k = geometry.rice_factor
    power = geometry.power
    return LinkStats(
        mean=float(np.sqrt(power * k / (k + 1.0))),
        variance=power / (k + 1.0),
        rice_factor=float(k),
    )


@dataclass(frozen=True)
class SystemConfig:
    """One scenario point.

    ``snr`` is the transmit SNR p/sigma^2 in linear scale; conversions from dB
    happen in the experiment layer only.
    """

    M: int
    N: int
    bits: int
    alpha: float
    snr: float
    sd: LinkStats
    sr: LinkStats
    rd: LinkStats

    def __post_init__(self):
        for name in ("M", "N", "bits"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value}")
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (self.snr > 0):
            raise ConfigError(f"transmit SNR must be positive, got {self.snr}")

    @classmethod
    def from_geometry(
        cls,
        M: int,
        N: int,
        bits: int,
        alpha: float,
        snr: float,
        sd: LinkGeometry,
        sr: LinkGeometry,
        rd: LinkGeometry,
    ) -> "SystemConfig":
        return cls(M, N, bits, alpha, snr, link_stats(sd), link_stats(sr), link_stats(rd))

    def link(self, name: str) -> LinkStats:
        return getattr(self, name)

    def replace(self, **changes) -> "SystemConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class ChannelRealization:
    """A single draw: h_sd (M,), H_sr (M, N), h_rd (N,)."""

    h_sd: NDArray[np.complex128]
    H_sr: NDArray[np.complex128]
    h_rd: NDArray[np.complex128]

    def __post_init__(self):
        M, N = self.H_sr.shape
        if self.h_sd.shape != (M,) or self.h_rd.shape != (N,):
            raise ConfigError(
                f"inconsistent shapes h_sd{self.h_sd.shape} H_sr{self.H_sr.shape} h_rd{self.h_rd.shape}"
            )

    @property
    def M(self) -> int:
        return self.H_sr.shape[0]

    @property
    def N(self) -> int:
        return self.H_sr.shape[1]


@dataclass
class ChannelBatch:
    """Stacked realizations: h_sd (n, M), H_sr (n, M, N), h_rd (n, N)."""

    h_sd: NDArray[np.complex128]
    H_sr: NDArray[np.complex128]
    h_rd: NDArray[np.complex128]

    def __len__(self) -> int:
        return self.h_sd.shape[0]

    def __getitem__(self, i: int) -> ChannelRealization:
        return ChannelRealization(self.h_sd[i], self.H_sr[i], self.h_rd[i])


def _block_rng(seed: int, block: int, link: str) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block), _LINK_ID[link]))
    return np.random.Generator(np.random.Philox(ss))


def _draw(stats: LinkStats, rng: np.random.Generator, shape: tuple) -> NDArray[np.complex128]:
    z = rng.standard_normal(shape + (2,)).view(np.complex128)[..., 0]
    z *= np.sqrt(stats.variance / 2.0)
    z += stats.mean
    return z


def _block_slice(config: SystemConfig, seed: int, block: int, count: int) -> ChannelBatch:
    # count < BLOCK_SIZE yields a prefix of the full block (row-major draws).
    M, N = config.M, config.N
    h_sd = _draw(config.sd, _block_rng(seed, block, "sd"), (count, M))
    H_sr = _draw(config.sr, _block_rng(seed, block, "sr"), (count, M, N))
    h_rd = _draw(config.rd, _block_rng(seed, block, "rd"), (count, N))
    return ChannelBatch(h_sd, H_sr, h_rd)


def iter_channel_blocks(config: SystemConfig, n: int, seed: int) -> Iterator[ChannelBatch]:
    """Yield consecutive batches covering sample indices 0..n-1."""
    if n < 1:
        raise ConfigError(f"sample count must be >= 1, got {n}")
    full, rest = divmod(int(n), BLOCK_SIZE)
    for block in range(full):
        yield _block_slice(config, seed, block, BLOCK_SIZE)
    if rest:
        yield _block_slice(config, seed, full, rest)


def sample_channels(config: SystemConfig, n: int, seed: int) -> ChannelBatch:
    blocks = list(iter_channel_blocks(config, n, seed))
    return ChannelBatch(
        np.concatenate([b.h_sd for b in blocks]),
        np.concatenate([b.H_sr for b in blocks]),
        np.concatenate([b.h_rd for b in blocks]),
    )


def sample_realization(config: SystemConfig, seed: int) -> ChannelRealization:
    return _block_slice(config, seed, 0, 1)[0]
