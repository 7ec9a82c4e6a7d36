"""Monte Carlo ground truth for the analytical SNR statistics.

Everything here simulates the received-signal model directly: MRC at the BS,
so the instantaneous SNR is ``snr * ||h_sd + H_sr diag(nu) h_rd||^2``.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .channel import (
    ChannelBatch,
    ChannelRealization,
    ConfigError,
    SystemConfig,
    iter_channel_blocks,
)
from .moments import PhaseVector

SAMPLE_MAGIC = b"IRSSNR01"


def config_fingerprint(config: SystemConfig) -> str:
    return hashlib.sha256(repr(config).encode()).hexdigest()[:16]


@dataclass
class SnrSampleSet:
    samples: NDArray[np.float64]
    fingerprint: str
    seed: int
    n: int = field(init=False)

    def __post_init__(self):
        self.n = int(self.samples.shape[0])

    def mean(self) -> float:
        return math.fsum(self.samples) / self.n

    def stderr(self) -> float:
        return float(np.std(self.samples, ddof=1) / np.sqrt(self.n)) if self.n > 1 else float("inf")

    def percentiles(self, q=(1, 5, 50, 95, 99)) -> dict:
        return dict(zip(q, np.percentile(self.samples, q)))


def _combine(batch: ChannelBatch, nu) -> NDArray[np.complex128]:
    """Effective channel h_sd + H_sr (nu * h_rd), shape (n, M)."""
    return batch.h_sd + np.matmul(batch.H_sr, (nu * batch.h_rd)[:, :, None])[:, :, 0]


def instantaneous_snr(realization: ChannelRealization, phases: PhaseVector, snr: float) -> float:
    if phases.N != realization.N:
        raise ConfigError(f"phase vector has N={phases.N}, realization has N={realization.N}")
    y = realization.h_sd + realization.H_sr @ (phases.coefficients * realization.h_rd)
    return float(snr * np.vdot(y, y).real)


def snr_of_batch(batch: ChannelBatch, phases: PhaseVector, snr: float) -> NDArray[np.float64]:
    y = _combine(batch, phases.coefficients)
    return snr * (y.real**2 + y.imag**2).sum(axis=1)


def simulate_snr(config: SystemConfig, phases: PhaseVector, n: int, seed: int) -> SnrSampleSet:
    if phases.N != config.N:
        raise ConfigError(f"phase vector has N={phases.N}, config has N={config.N}")
    chunks = [snr_of_batch(b, phases, config.snr) for b in iter_channel_blocks(config, n, seed)]
    return SnrSampleSet(np.concatenate(chunks), config_fingerprint(config), seed)


def empirical_outage(samples: SnrSampleSet, gamma_th: float) -> float:
    return float(np.count_nonzero(samples.samples <= gamma_th)) / samples.n


def empirical_rate(samples: SnrSampleSet) -> float:
    return math.fsum(np.log2(1.0 + samples.samples)) / samples.n


def outage_stderr(p: float, n: int) -> float:
    """Binomial standard error, floored at one count so p in {0, 1} is not exact."""
    return math.sqrt(max(p * (1 - p), 1.0 / n) / n)


def empirical_cdf_distance(samples: SnrSampleSet, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance between the sample ECDF and ``cdf``."""
    x = np.sort(samples.samples)
    n = x.shape[0]
    f = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def term_samples(batch: ChannelBatch, nu) -> dict:
    """Per-draw A, B, C1, C2 of the SNR decomposition (normalized by the transmit SNR)."""
    cascade = batch.H_sr * (nu * batch.h_rd)[:, None, :]  # (n, M, N)
    w = cascade.sum(axis=2)
    A = (np.abs(batch.h_sd) ** 2).sum(axis=1)
    B = (np.conj(batch.h_sd) * w).sum(axis=1)
    C1 = (np.abs(cascade) ** 2).sum(axis=(1, 2))
    C2 = (np.abs(w) ** 2).sum(axis=1) - C1
    return {"A": A, "B": B, "C1": C1, "C2": C2}


TERM_PRODUCTS = {
    "EA": lambda t: t["A"],
    "EB": lambda t: t["B"],
    "EC1": lambda t: t["C1"],
    "EC2": lambda t: t["C2"],
    "EAsq": lambda t: t["A"] ** 2,
    "EB2": lambda t: t["B"] ** 2,
    "EC1sq": lambda t: t["C1"] ** 2,
    "EC2sq": lambda t: t["C2"] ** 2,
    "EAB": lambda t: t["A"] * t["B"],
    "EAC1": lambda t: t["A"] * t["C1"],
    "EAC2": lambda t: t["A"] * t["C2"],
    "EabsB2": lambda t: np.abs(t["B"]) ** 2,
    "EBC1": lambda t: t["B"] * t["C1"],
    "EBC2": lambda t: t["B"] * t["C2"],
    "EC1C2": lambda t: t["C1"] * t["C2"],
}


def term_estimates(config: SystemConfig, phases: PhaseVector, n: int, seed: int) -> dict:
    """Monte Carlo mean and standard error of every moment term.

    Returns ``{name: (mean, stderr)}``; for complex terms both are complex, with
    the real and imaginary standard errors carried in the matching components.
    """
    nu = phases.coefficients
    acc = {name: [] for name in TERM_PRODUCTS}
    for batch in iter_channel_blocks(config, n, seed):
        t = term_samples(batch, nu)
        for name, fn in TERM_PRODUCTS.items():
            acc[name].append(fn(t))
    out = {}
    for name, parts in acc.items():
        x = np.concatenate(parts)
        mean = x.mean()
        root_n = np.sqrt(x.size)
        if np.iscomplexobj(x):
            se = complex(x.real.std(ddof=1) / root_n, x.imag.std(ddof=1) / root_n)
        else:
            se = float(x.std(ddof=1) / root_n)
        out[name] = (mean, se)
    return out


def write_samples(path: str | Path, samples: SnrSampleSet) -> None:
    """Raw dump: 8-byte magic, u32 count, u32 reserved, then little-endian float64."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(SAMPLE_MAGIC + struct.pack("<II", samples.n, 0))
        fh.write(np.ascontiguousarray(samples.samples, dtype="<f8").tobytes())


def read_samples(path: str | Path) -> NDArray[np.float64]:
    raw = Path(path).read_bytes()
    if raw[:8] != SAMPLE_MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:8]!r}")
    count, _ = struct.unpack("<II", raw[8:16])
    data = np.frombuffer(raw, dtype="<f8", offset=16)
    if data.shape[0] != count:
        raise ValueError(f"{path}: header says {count} samples, found {data.shape[0]}")
    return data.astype(np.float64)


# --- instantaneous-CSI greedy baseline ---------------------------------------


def _candidate_angles(bits: int | None):
    if bits is None:
        return None
    return np.arange(2**bits) * (2.0 * np.pi / 2**bits)


def greedy_phases(batch: ChannelBatch, bits: int | None, alpha: float, max_passes: int = 100):
    """Coordinate ascent on ||h_sd + H diag(nu) h_rd||^2 for every realization in ``batch``.

    Starts from all-zero phases and sweeps n = 1..N, setting each phase to the
    best candidate with the others fixed, until a full pass changes nothing.
    With ``bits=None`` each coordinate step uses the exact continuous maximizer.
    Returns (angles (n, N), normalized power (n,)).
    """
    n, M, N = batch.H_sr.shape
    cand = _candidate_angles(bits)
    cols = alpha * batch.H_sr * batch.h_rd[:, None, :]  # c_k, shape (n, M, N)
    theta = np.zeros((n, N))
    y = batch.h_sd + cols.sum(axis=2)
    power = (np.abs(y) ** 2).sum(axis=1)
    active = np.ones(n, dtype=bool)
    for _ in range(max_passes):
        improved = np.zeros(n, dtype=bool)
        for k in range(N):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            c = cols[idx, :, k]
            old = np.exp(1j * theta[idx, k])
            rest = y[idx] - c * old[:, None]
            z = (np.conj(rest) * c).sum(axis=1)  # maximize Re(e^{j phi} z)
            if cand is None:
                new_phase = np.mod(-np.angle(z), 2 * np.pi)
            else:
                score = np.cos(cand[None, :] + np.angle(z)[:, None])
                new_phase = cand[np.argmax(score, axis=1)]
            new_y = rest + c * np.exp(1j * new_phase)[:, None]
            new_power = (np.abs(new_y) ** 2).sum(axis=1)
            better = new_power > power[idx] * (1 + 1e-12)
            sel = idx[better]
            theta[sel, k] = new_phase[better]
            y[sel] = new_y[better]
            power[sel] = new_power[better]
            improved[sel] = True
        active &= improved
        if not active.any():
            break
    return theta, power


def instantaneous_baseline(
    realization: ChannelRealization, bits: int | None, snr: float, alpha: float = 1.0
) -> tuple[PhaseVector, float]:
    batch = ChannelBatch(realization.h_sd[None], realization.H_sr[None], realization.h_rd[None])
    theta, power = greedy_phases(batch, bits, alpha)
    if bits is None:
        phases = PhaseVector.continuous(theta[0], alpha)
    else:
        levels = np.rint(theta[0] / (2 * np.pi / 2**bits)).astype(np.int64)
        phases = PhaseVector.quantized(levels, bits, alpha)
    return phases, float(snr * power[0])


def simulate_baseline(
    config: SystemConfig, bits: int | None, n: int, seed: int
) -> SnrSampleSet:
    """SNR samples when phases are re-optimized per realization by the greedy baseline."""
    chunks = []
    for batch in iter_channel_blocks(config, n, seed):
        _, power = greedy_phases(batch, bits, config.alpha)
        chunks.append(config.snr * power)
    return SnrSampleSet(np.concatenate(chunks), config_fingerprint(config), seed)
