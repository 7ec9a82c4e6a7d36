"""Statistical-CSI phase design: objectives, MPSO, PSO and exhaustive search."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .channel import ConfigError, SystemConfig
from .metrics import ergodic_rate_batch, outage_batch
from .moments import PhaseVector, moments_from_coefficients

BRUTE_FORCE_LIMIT = 2**20


@dataclass
class OptimizerSettings:
    particles: int = 200
    iterations: int = 100
    mpso_spread: float = 0.2
    mpso_inertia: tuple[float, float] = (0.9, 0.2)
    pso_inertia: tuple[float, float] = (0.9, 0.4)
    accel: tuple[float, float] = (2.0, 2.0)
    velocity_clamp: float = 0.5  # fraction of the angle range, PSO only
    wrap_angles: bool = False
    per_dimension_random: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.particles < 2:
            raise ConfigError("need at least 2 particles")
        if self.iterations < 1:
            raise ConfigError("need at least 1 iteration")
        if not self.mpso_spread > 0:
            raise ConfigError("mpso_spread must be positive")
        if min(self.accel) <= 0:
            raise ConfigError("acceleration factors must be positive")


@dataclass
class Objective:
    """Deterministic map from phase angles to a scalar.

    ``batch`` takes angles of shape (T, N) and returns (T,) values; entries
    that could not be evaluated come back as NaN.
    """

    name: str
    sense: str
    batch: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    N: int
    alpha: float = 1.0

    def __post_init__(self):
        if self.sense not in ("minimize", "maximize"):
            raise ValueError(f"unknown sense {self.sense!r}")

    def __call__(self, phases: PhaseVector | NDArray) -> float:
        angles = phases.angles if isinstance(phases, PhaseVector) else np.asarray(phases, float)
        return float(self.batch(angles[None, :])[0])

    @property
    def worst(self) -> float:
        return np.inf if self.sense == "minimize" else -np.inf

    def fitness(self, values: NDArray) -> NDArray:
        """Values mapped so that smaller is better; failures become +inf."""
        values = np.asarray(values, dtype=float)
        cost = values if self.sense == "minimize" else -values
        return np.where(np.isfinite(cost), cost, np.inf)


def _gamma_params(config: SystemConfig, angles):
    nu = config.alpha * np.exp(1j * np.asarray(angles, dtype=float))
    m1, m2 = moments_from_coefficients(config, nu)
    var = m2 - m1 * m1
    ok = (m1 > 0) & (var > 0)
    shape = np.where(ok, m1 * m1 / np.where(ok, var, 1.0), np.nan)
    scale = np.where(ok, var / np.where(ok, m1, 1.0), np.nan)
    return shape, scale, ok


def build_op_objective(config: SystemConfig, gamma_th: float) -> Objective:
    if not gamma_th >= 0:
        raise ConfigError(f"threshold must be nonnegative, got {gamma_th}")

    def batch(angles):
        shape, scale, ok = _gamma_params(config, np.atleast_2d(angles))
        out = np.full(shape.shape, np.nan)
        if ok.any():
            out[ok] = outage_batch(shape[ok], scale[ok], gamma_th)
        return out

    return Objective("outage", "minimize", batch, config.N, config.alpha)


def build_rate_objective(config: SystemConfig) -> Objective:
    def batch(angles):
        shape, scale, ok = _gamma_params(config, np.atleast_2d(angles))
        out = np.full(shape.shape, np.nan)
        if ok.any():
            out[ok] = ergodic_rate_batch(shape[ok], scale[ok])
        return out

    return Objective("rate", "maximize", batch, config.N, config.alpha)


def phase_set(bits: int) -> NDArray[np.float64]:
    if bits < 1:
        raise ConfigError(f"bits must be >= 1, got {bits}")
    return np.arange(2**bits) * (2.0 * np.pi / 2**bits)


@dataclass
class OptimizationResult:
    phases: PhaseVector
    value: float
    trace: NDArray[np.float64] = field(repr=False)


def _linear(schedule: tuple[float, float], i: int, total: int) -> float:
    start, end = schedule
    return start - i * (start - end) / total


def mpso_optimize(
    objective: Objective, N: int, bits: int, settings: OptimizerSettings | None = None
) -> OptimizationResult:
    """Multi-valued PSO over integer phase levels 0 .. 2^bits - 1.

    Velocities live in level units. Each iteration a velocity is squashed to
    ``S = (L - 1) / (1 + exp(-V))`` and the new level is a rounded normal draw
    around ``S`` with spread ``mpso_spread * (L - 1)``, clamped to [0, L - 1].
    """
    s = settings or OptimizerSettings()
    if N != objective.N:
        raise ConfigError(f"objective expects N={objective.N}, got {N}")
    rng = np.random.default_rng(s.seed)
    L = 2**bits
    top = L - 1
    step = 2.0 * np.pi / L
    T = s.particles
    rand_shape = (T, N) if s.per_dimension_random else (T, 1)

    x = rng.integers(0, L, size=(T, N))
    v = np.zeros((T, N))
    pbest_x = x.copy()
    pbest_cost = np.full(T, np.inf)
    pbest_val = np.full(T, objective.worst)
    gbest_x = x[0].copy()
    gbest_cost = np.inf
    gbest_val = objective.worst
    trace = np.empty(s.iterations)

    for i in range(s.iterations):
        values = objective.batch(x * step)
        cost = objective.fitness(values)
        better = cost < pbest_cost
        pbest_x[better] = x[better]
        pbest_cost[better] = cost[better]
        pbest_val[better] = values[better]
        j = int(np.argmin(pbest_cost))
        if pbest_cost[j] < gbest_cost:
            gbest_cost = pbest_cost[j]
            gbest_x = pbest_x[j].copy()
            gbest_val = pbest_val[j]
        trace[i] = gbest_val

        omega = _linear(s.mpso_inertia, i + 1, s.iterations)
        psi1 = rng.uniform(0.0, 2.0, rand_shape)
        psi2 = rng.uniform(0.0, 2.0, rand_shape)
        noise = rng.standard_normal((T, N))
        v = omega * v + psi1 * (pbest_x - x) + psi2 * (gbest_x[None, :] - x)
        centre = top / (1.0 + np.exp(-v))
        x = np.clip(np.rint(centre + s.mpso_spread * top * noise), 0, top).astype(np.int64)

    best = PhaseVector.quantized(gbest_x, bits, objective.alpha)
    return OptimizationResult(best, float(gbest_val), trace)


def pso_optimize(
    objective: Objective, N: int, settings: OptimizerSettings | None = None
) -> OptimizationResult:
    """Continuous PSO over [0, 2pi]^N with linearly decreasing inertia."""
    s = settings or OptimizerSettings()
    if N != objective.N:
        raise ConfigError(f"objective expects N={objective.N}, got {N}")
    rng = np.random.default_rng(s.seed)
    span = 2.0 * np.pi
    vmax = s.velocity_clamp * span
    T = s.particles
    rand_shape = (T, N) if s.per_dimension_random else (T, 1)
    c1, c2 = s.accel

    x = rng.uniform(0.0, span, size=(T, N))
    v = np.zeros((T, N))
    pbest_x = x.copy()
    pbest_cost = np.full(T, np.inf)
    pbest_val = np.full(T, objective.worst)
    gbest_x = x[0].copy()
    gbest_cost = np.inf
    gbest_val = objective.worst
    trace = np.empty(s.iterations)

    for i in range(s.iterations):
        values = objective.batch(x)
        cost = objective.fitness(values)
        better = cost < pbest_cost
        pbest_x[better] = x[better]
        pbest_cost[better] = cost[better]
        pbest_val[better] = values[better]
        j = int(np.argmin(pbest_cost))
        if pbest_cost[j] < gbest_cost:
            gbest_cost = pbest_cost[j]
            gbest_x = pbest_x[j].copy()
            gbest_val = pbest_val[j]
        trace[i] = gbest_val

        omega = _linear(s.pso_inertia, i + 1, s.iterations)
        r1 = rng.uniform(0.0, 1.0, rand_shape)
        r2 = rng.uniform(0.0, 1.0, rand_shape)
        v = omega * v + c1 * r1 * (pbest_x - x) + c2 * r2 * (gbest_x[None, :] - x)
        v = np.clip(v, -vmax, vmax)
        x = x + v
        x = np.mod(x, span) if s.wrap_angles else np.clip(x, 0.0, span)

    best = PhaseVector.continuous(gbest_x, objective.alpha)
    return OptimizationResult(best, float(gbest_val), trace)


def enumerate_levels(N: int, bits: int, reverse: bool = False, chunk: int = 65536):
    """Yield (k, N) arrays covering every level vector in lexicographic order."""
    L = 2**bits
    total = L**N
    if total > BRUTE_FORCE_LIMIT:
        raise ConfigError(f"2^(bN) = {total} candidates exceeds the {BRUTE_FORCE_LIMIT} guard")
    index = np.arange(total)[::-1] if reverse else np.arange(total)
    powers = L ** np.arange(N - 1, -1, -1)
    for start in range(0, total, chunk):
        idx = index[start : start + chunk]
        yield (idx[:, None] // powers[None, :]) % L


def brute_force(objective: Objective, N: int, bits: int, reverse: bool = False):
    """Exact optimum by enumeration; ties resolve to the first candidate visited."""
    step = 2.0 * np.pi / 2**bits
    best_levels, best_cost, best_val = None, np.inf, objective.worst
    for levels in enumerate_levels(N, bits, reverse):
        values = objective.batch(levels * step)
        cost = objective.fitness(values)
        j = int(np.argmin(cost))
        if best_levels is None or cost[j] < best_cost:
            best_levels, best_cost, best_val = levels[j].copy(), cost[j], values[j]
    return PhaseVector.quantized(best_levels, bits, objective.alpha), float(best_val)


