"""Univariate defective Gompertz distribution.

The survival function ``S(t) = exp{-(alpha/beta) (1 - exp(-beta t))}`` tends to
the cure rate ``exp(-alpha/beta)`` instead of zero, so the distribution carries
only ``1 - rho`` of probability mass on finite times.

All functions accept scalars or numpy arrays for ``t``/``u``. Parameters are
validated once, when :class:`DGParams` is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# inverse_cdf refuses probability levels this close to the defective ceiling
BOUNDARY_GAP = 1e-12


@dataclass(frozen=True)
class DGParams:
    """Shape ``alpha`` and scale ``beta`` of one defective Gompertz margin."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a finite positive number, got {value!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))


def _times(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise DomainError("time must be nonnegative")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def log_survival(p: DGParams, t):
    t = _times(t)
    # -(a/b)(1 - e^{-bt}) == (a/b) expm1(-bt), accurate for small bt
    return _out((p.alpha / p.beta) * np.expm1(-p.beta * t))


def survival(p: DGParams, t):
    """Survival probability ``P(T > t)``; bounded below by :func:`cure_rate`."""
    return _out(np.exp(log_survival(p, t)))


def cdf(p: DGParams, t):
    # 1 - S(t) == -expm1(log S(t))
    return _out(-np.expm1(log_survival(p, t)))


def log_hazard(p: DGParams, t):
    t = _times(t)
    return _out(math.log(p.alpha) - p.beta * t)


def hazard(p: DGParams, t):
    """Hazard ``alpha exp(-beta t)``; always decreasing."""
    t = _times(t)
    return _out(p.alpha * np.exp(-p.beta * t))


def log_density(p: DGParams, t):
    return _out(np.asarray(log_hazard(p, t)) + np.asarray(log_survival(p, t)))


def density(p: DGParams, t):
    """Sub-density ``h(t) S(t)``; integrates to ``1 - cure_rate(p)``."""
    return _out(np.asarray(hazard(p, t)) * np.asarray(survival(p, t)))


def cure_rate(p: DGParams) -> float:
    return math.exp(-p.alpha / p.beta)


def inverse_cdf(p: DGParams, u):
    """Time ``t`` with ``F(t) = u`` for ``0 < u < 1 - cure_rate(p)``.

    Levels at or above the defective ceiling have no finite preimage and raise
    :class:`DomainError`; callers sampling cured subjects handle that mass
    themselves.
    """
    u = np.asarray(u, dtype=float)
    ceiling = -math.expm1(-p.alpha / p.beta)
    if np.any(~(u > 0)) or np.any(u >= ceiling - BOUNDARY_GAP):
        raise DomainError(f"probability level must lie in (0, {ceiling:.6g}) for these parameters")
    inner = (p.beta / p.alpha) * np.log1p(-u)
    return _out(-np.log1p(inner) / p.beta)
