"""Exact first and second moments of the end-to-end SNR and the gamma fit.

The normalized SNR ``gamma / snr`` is split as ``A + 2 Re(B) + C1 + C2``:

* ``A``  = sum_j |h_sd_j|^2                                (direct link)
* ``B``  = sum_j conj(h_sd_j) sum_i H_ji h_rd_i nu_i       (direct x cascade)
* ``C1`` = sum_j sum_i |H_ji h_rd_i nu_i|^2                (cascade, i == k)
* ``C2`` = sum_j sum_{i != k} conj(H_ji h_rd_i nu_i) H_jk h_rd_k nu_k

Every expectation below is a closed form in the link statistics and the
phase sums ``s1 .. s5``. All functions broadcast over a leading batch
dimension of the reflection coefficients so the optimizers can score a whole
swarm in one call.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from numpy.typing import NDArray

from .channel import ConfigError, SystemConfig


class DegenerateVarianceError(ValueError):
    """The second moment does not exceed the squared mean."""


@dataclass(frozen=True)
class PhaseVector:
    """IRS phases, either as integer quantization levels or continuous angles."""

    angles: NDArray[np.float64]
    alpha: float = 1.0
    levels: NDArray[np.int64] | None = None
    bits: int | None = None

    @classmethod
    def quantized(cls, levels, bits: int, alpha: float = 1.0) -> "PhaseVector":
        levels = np.asarray(levels, dtype=np.int64)
        top = 2**bits - 1
        if levels.ndim != 1 or levels.size == 0:
            raise ConfigError("levels must be a non-empty 1-D vector")
        if levels.min() < 0 or levels.max() > top:
            raise ConfigError(f"levels must lie in [0, {top}]")
        angles = levels * (2.0 * np.pi / 2**bits)
        return cls(angles=angles, alpha=alpha, levels=levels, bits=bits)

    @classmethod
    def continuous(cls, angles, alpha: float = 1.0) -> "PhaseVector":
        angles = np.asarray(angles, dtype=np.float64)
        if angles.ndim != 1 or angles.size == 0:
            raise ConfigError("angles must be a non-empty 1-D vector")
        return cls(angles=angles, alpha=alpha)

    @classmethod
    def zeros(cls, N: int, alpha: float = 1.0) -> "PhaseVector":
        return cls.continuous(np.zeros(N), alpha)

    @property
    def N(self) -> int:
        return self.angles.shape[0]

    @property
    def coefficients(self) -> NDArray[np.complex128]:
        return self.alpha * np.exp(1j * self.angles)

    def rotated(self, offset: float) -> "PhaseVector":
        return PhaseVector.continuous(self.angles + offset, self.alpha)


@dataclass(frozen=True)
class PhaseSums:
    s1: complex
    s2: float
    s3: float
    s4: float
    s5: complex


@dataclass(frozen=True)
class MomentTerms:
    """First-moment terms (EA, EB, EC1, EC2) and the eleven second-moment terms."""

    EA: float
    EB: complex
    EC1: float
    EC2: float
    EAsq: float
    EB2: complex
    EC1sq: float
    EC2sq: float
    EAB: complex
    EAC1: float
    EAC2: float
    EabsB2: float
    EBC1: complex
    EBC2: complex
    EC1C2: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class GammaFit:
    shape: float
    scale: float

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2


def _check(config: SystemConfig, phases: PhaseVector):
    if phases.N != config.N:
        raise ConfigError(f"phase vector has N={phases.N}, config has N={config.N}")


def sums_from_coefficients(nu: NDArray[np.complex128]):
    """Phase sums for coefficients ``nu`` of shape (..., N) via the O(N) identities."""
    nu = np.asarray(nu, dtype=np.complex128)
    N = nu.shape[-1]
    s1 = nu.sum(axis=-1)
    power = (np.abs(nu) ** 2).sum(axis=-1)
    abs_s1 = np.abs(s1) ** 2
    s2 = abs_s1 - power
    s3 = (N - 2) * abs_s1 + power
    s5 = (N - 1) * s1
    return s1, s2, s3, s3.copy(), s5


def phase_sums(phases: PhaseVector) -> PhaseSums:
    s1, s2, s3, s4, s5 = sums_from_coefficients(phases.coefficients)
    if phases.N == 1:
        # excluded-index sums are empty; avoid (N-2)|s1|^2 + N a^2 rounding
        s3 = s4 = 0.0
    return PhaseSums(complex(s1), float(s2), float(s3), float(s4), complex(s5))


def terms_from_coefficients(config: SystemConfig, nu) -> MomentTerms:
    """Moment terms for coefficients of shape (..., N); fields broadcast accordingly."""
    nu = np.asarray(nu, dtype=np.complex128)
    if nu.shape[-1] != config.N:
        raise ConfigError(f"coefficients have N={nu.shape[-1]}, config has N={config.N}")
    M, N = config.M, config.N
    a2 = config.alpha**2
    s1, s2, s3, s4, s5 = sums_from_coefficients(nu)
    if N == 1:
        s3 = s4 = np.zeros_like(s3)

    d, s, r = config.sd, config.sr, config.rd
    Pd, Ps, Pr = d.power, s.power, r.power
    md, ms, mr = d.mean, s.mean, r.mean
    vd, vs, vr = d.variance, s.variance, r.variance
    Ks, Kr = s.rice_factor, r.rice_factor
    # (2K + 1)/(K + 1)^2 = (E|h|^4 - P^2) / P^2
    ex_d = (2 * d.rice_factor + 1) / (d.rice_factor + 1) ** 2
    ex_s = (2 * Ks + 1) / (Ks + 1) ** 2
    ex_r = (2 * Kr + 1) / (Kr + 1) ** 2
    lo = md * ms * mr  # product of LoS amplitudes
    casc = (ms * mr) ** 2

    EA = M * Pd
    EB = M * lo * s1
    EC1 = a2 * M * N * Ps * Pr
    EC2 = M * casc * s2

    EAsq = M * Pd**2 * (ex_d + M)
    EB2 = M**2 * (lo * s1) ** 2
    EC1sq = a2**2 * M * N * Ps**2 * Pr**2 * (ex_s * (ex_r + 1) + M * (ex_r + N))
    EC2sq = (
        a2**2 * M * N * (N - 1) * vs**2 * Pr**2 * (1 + 2 * Ks / (Kr + 1) + M * Ks**2 / (Kr + 1) ** 2)
        + a2 * M * vs * ms**2 * Pr * mr**2 * (s3 + s4) * (1 + M * Ks / (Kr + 1))
        + M**2 * casc**2 * s2**2
    )
    EAB = M * lo * s1 * (M * Pd + vd)
    EAC1 = EA * EC1
    EAC2 = EA * EC2
    EabsB2 = a2 * M * N * Pr * (Pd * Ps + (M - 1) * md**2 * ms**2) + M * casc * s2 * (vd + M * md**2)
    EBC1 = a2 * M * Ps * Pr * lo * s1 * (
        M * N + M / (Kr + 1) + 1 / (Ks + 1) + 1 / ((Ks + 1) * (Kr + 1))
    )
    EBC2 = M * lo * (vs * Pr * a2 * s5 * (1 + M * Ks / (Kr + 1)) + M * ms**2 * mr**2 * s1 * s2)
    EC1C2 = a2 * M * casc * Ps * Pr * s2 * (
        M * N + 2 * M / (Kr + 1) + 2 / (Ks + 1) + 2 / ((Ks + 1) * (Kr + 1))
    )
    return MomentTerms(
        EA=EA, EB=EB, EC1=EC1, EC2=EC2, EAsq=EAsq, EB2=EB2, EC1sq=EC1sq, EC2sq=EC2sq,
        EAB=EAB, EAC1=EAC1, EAC2=EAC2, EabsB2=EabsB2, EBC1=EBC1, EBC2=EBC2, EC1C2=EC1C2,
    )


def _first(t: MomentTerms):
    return t.EA + 2 * np.real(t.EB) + t.EC1 + t.EC2


def _second(t: MomentTerms):
    return (
        t.EAsq
        + 2 * np.real(t.EB2)
        + t.EC1sq
        + t.EC2sq
        + 4 * np.real(t.EAB)
        + 2 * t.EAC1
        + 2 * t.EAC2
        + 2 * t.EabsB2
        + 4 * np.real(t.EBC1)
        + 4 * np.real(t.EBC2)
        + 2 * t.EC1C2
    )


def moments_from_coefficients(config: SystemConfig, nu):
    """(E[gamma], E[gamma^2]) for coefficients of shape (..., N)."""
    t = terms_from_coefficients(config, nu)
    g = config.snr
    return g * _first(t), g * g * _second(t)


def moment_terms(config: SystemConfig, phases: PhaseVector) -> MomentTerms:
    _check(config, phases)
    t = terms_from_coefficients(config, phases.coefficients)
    out = {}
    for name, value in t.as_dict().items():
        value = complex(value) if np.iscomplexobj(value) else float(value)
        out[name] = value
    return MomentTerms(**out)


def mean_snr(config: SystemConfig, phases: PhaseVector) -> float:
    """E[gamma] = snr * M * (Pd + 2 mu_sd mu_sr mu_rd Re s1 + a^2 N Ps Pr + (mu_sr mu_rd)^2 s2)."""
    _check(config, phases)
    return float(config.snr * _first(terms_from_coefficients(config, phases.coefficients)))


def second_moment_snr(config: SystemConfig, phases: PhaseVector) -> float:
    _check(config, phases)
    return float(config.snr**2 * _second(terms_from_coefficients(config, phases.coefficients)))


def gamma_fit(m1: float, m2: float) -> GammaFit:
    if not (m1 > 0):
        raise DegenerateVarianceError(f"mean must be positive, got {m1}")
    var = m2 - m1 * m1
    if not (var > 0):
        raise DegenerateVarianceError(f"non-positive variance m2 - m1^2 = {var}")
    return GammaFit(shape=m1 * m1 / var, scale=var / m1)


def fit_snr(config: SystemConfig, phases: PhaseVector) -> GammaFit:
    return gamma_fit(mean_snr(config, phases), second_moment_snr(config, phases))
