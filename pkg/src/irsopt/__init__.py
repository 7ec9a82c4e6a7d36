"""Quantized IRS phase design from statistical CSI for a SIMO uplink."""
from .channel import (
    ChannelBatch,
    ChannelRealization,
    ConfigError,
    InvalidGeometryError,
    LinkGeometry,
    LinkStats,
    SystemConfig,
    link_stats,
    sample_channels,
    sample_realization,
)
from .metrics import DomainError, ergodic_rate, outage_probability, regularized_lower_gamma
from .moments import (
    DegenerateVarianceError,
    GammaFit,
    PhaseVector,
    fit_snr,
    gamma_fit,
    mean_snr,
    moment_terms,
    phase_sums,
    second_moment_snr,
)
from .optimizers import (
    OptimizerSettings,
    brute_force,
    build_op_objective,
    build_rate_objective,
    mpso_optimize,
    pso_optimize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
