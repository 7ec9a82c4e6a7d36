"""Outage probability and ergodic rate of a gamma-distributed SNR."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .moments import GammaFit

_EPS = np.finfo(float).eps
_TINY = 1e-300


class DomainError(ValueError):
    pass


def _series(k, x, tol, max_iter):
    # sum_{n>=0} x^n / (k (k+1) ... (k+n)), times x^k e^-x / Gamma(k)
    term = 1.0 / k
    total = term.copy()
    ap = k.copy()
    for _ in range(max_iter):
        ap = ap + 1.0
        term = term * x / ap
        total = total + term
        if np.all(np.abs(term) <= np.abs(total) * tol):
            break
    else:
        raise RuntimeError("incomplete gamma series did not converge")
    return total * np.exp(-x + k * np.log(x) - gammaln(k))


def _continued_fraction(k, x, tol, max_iter):
    # modified Lentz evaluation of the upper tail Q(k, x)
    b = x + 1.0 - k
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, max_iter + 1):
        an = -i * (i - k)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= tol):
            break
    else:
        raise RuntimeError("incomplete gamma continued fraction did not converge")
    return np.exp(-x + k * np.log(x) - gammaln(k)) * h


def regularized_lower_gamma(k, x, tol: float = 1e-15):
    """P(k, x) = gamma(k, x) / Gamma(k), elementwise over broadcast ``k`` and ``x``.

    Series for x < k + 1, Lentz continued fraction for the complement otherwise.
    """
    k_arr, x_arr = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(x, dtype=float))
    if np.any(~(k_arr > 0)):
        raise DomainError("shape k must be positive")
    if np.any(~(x_arr >= 0)):
        raise DomainError("argument x must be nonnegative")
    out = np.zeros(k_arr.shape)
    flat_k, flat_x, flat_out = k_arr.ravel(), x_arr.ravel(), out.ravel()
    max_iter = int(100 + 20 * math.sqrt(float(flat_k.max(initial=1.0))))

    use_series = (flat_x > 0) & (flat_x < flat_k + 1.0)
    use_cf = flat_x >= flat_k + 1.0
    if use_series.any():
        flat_out[use_series] = _series(flat_k[use_series], flat_x[use_series], tol, 4 * max_iter)
    if use_cf.any():
        q = _continued_fraction(flat_k[use_cf], flat_x[use_cf], tol, max_iter)
        flat_out[use_cf] = 1.0 - q
    out = np.clip(flat_out.reshape(k_arr.shape), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def outage_probability(fit: GammaFit, gamma_th: float) -> float:
    """P[gamma <= gamma_th] under the fitted gamma law."""
    if not (gamma_th >= 0):
        raise DomainError(f"threshold must be nonnegative, got {gamma_th}")
    return regularized_lower_gamma(fit.shape, gamma_th / fit.scale)


def outage_batch(shape, scale, gamma_th: float):
    return regularized_lower_gamma(shape, gamma_th / np.asarray(scale, dtype=float))


# --- ergodic rate -------------------------------------------------------------
#
# With X ~ Gamma(k, theta) and Y = log(X / theta), Y has density
# exp(k y - e^y) / Gamma(k), independent of theta, and
#     E[ln(1 + X)] = int ln(1 + theta e^y) exp(k y - e^y) / Gamma(k) dy.
# The integrand is analytic in |Im y| < pi for every theta, so the trapezoid
# rule on y converges geometrically; the step is halved until two successive
# estimates agree. Grid is laid out in t = (y - ln k) sqrt(k), which centres
# and scales the log-gamma density for large k.


def _rate_nats(k, theta, h):
    k = np.asarray(k, dtype=float)[..., None]
    log_theta = np.log(np.asarray(theta, dtype=float))[..., None]
    sk = np.sqrt(k)
    kmin = float(k.min())
    t_lo = -(10.0 + 45.0 / math.sqrt(kmin) + 6.0 * max(0.0, float(log_theta.max())) / math.sqrt(kmin))
    t_hi = 10.0 + 5.0 * math.sqrt(1.0 / kmin)
    t = np.arange(t_lo, t_hi + h, h)
    # step in y is h / sqrt(k); cap it at h so small k is not undersampled
    scale = np.minimum(1.0 / sk, 1.0)
    y = np.log(k) + t * scale
    logp = k * y - np.exp(y)
    logp = logp - logp.max(axis=-1, keepdims=True)
    p = np.exp(logp)
    f = np.logaddexp(0.0, log_theta + y)
    return (f * p).sum(axis=-1) / p.sum(axis=-1)


def ergodic_rate_batch(shape, scale, tol: float = 1e-11, max_halvings: int = 12):
    """Vectorized E[log2(1 + X)] for X ~ Gamma(shape, scale)."""
    shape = np.asarray(shape, dtype=float)
    scale = np.asarray(scale, dtype=float)
    if not (np.all(np.isfinite(shape)) and np.all(np.isfinite(scale))):
        raise DomainError("gamma parameters must be finite")
    if np.any(shape <= 0) or np.any(scale <= 0):
        raise DomainError("gamma parameters must be positive")
    h = 0.5
    prev = _rate_nats(shape, scale, h)
    for _ in range(max_halvings):
        h /= 2
        cur = _rate_nats(shape, scale, h)
        if np.all(np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))):
            return cur / math.log(2.0)
        prev = cur
    raise RuntimeError("ergodic-rate quadrature did not converge")


def ergodic_rate(fit: GammaFit) -> float:
    return float(ergodic_rate_batch(fit.shape, fit.scale))
