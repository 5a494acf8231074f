"""Synthetic right-censored samples with cure fractions and Clayton dependence.

The default ``method="recipe"`` is the generator used for simulation studies:
cure indicators per margin, defective inverse-CDF times, uniform censoring up
to the largest finite latent time, and a second margin whose level ``w`` is
obtained from the Clayton conditional distribution given the first margin's
level. Two steps need a concrete reading:

* the conditional step is solved for ``w`` (``dC/du(u1, w) = u2``) using the
  Clayton conditional with the correct exponents, and ``w`` is then used as a
  probability level for the second inverse CDF, capped at ``1 - rho2``;
* the cure-status mixing draw uses ``p_mix = phi / (phi + 1)`` because a
  Bernoulli with success probability ``phi`` is impossible for ``phi > 1``.
  ``mixing="raw"`` keeps the raw rule and rejects ``phi > 1``.

``method="exact"`` draws ``(S1(T1), S2(T2))`` directly from the Clayton copula
and maps levels below the cure rates to infinite latent times; samples from it
follow the fitted model exactly and serve as a reference.

Randomness: subject ``i`` consumes a fixed block of ``DRAWS_PER_SUBJECT``
uniforms from a Philox stream keyed by the seed, so any index range can be
generated independently and the result does not depend on chunking.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import clayton, dgompertz
from .bdgd import BdgdParams, Dataset

DRAWS_PER_SUBJECT = 8
MAX_RETRIES = 100
MIX_EPS = 1e-12

# column of each uniform inside a subject's block
_M1, _U1, _M2, _U2, _K, _C1, _C2 = range(7)


@dataclass(frozen=True)
class Scenario:
    id: int
    params: BdgdParams


_TABLE = {
    # (alpha1, alpha2, beta1, beta2) pattern, repeated for phi in 1, 3, 10
    0: (1.0, 1.0, 0.8, 0.8),
    1: (0.5, 0.5, 1.5, 1.5),
    2: (1.0, 0.5, 0.8, 1.5),
    3: (0.5, 1.0, 1.5, 0.8),
}


def scenario_catalog() -> list[Scenario]:
    out = []
    for block, phi in enumerate((1.0, 3.0, 10.0)):
        for j in range(4):
            a1, a2, b1, b2 = _TABLE[j]
            out.append(Scenario(4 * block + j + 1, BdgdParams(a1, b1, a2, b2, phi)))
    return out


def get_scenario(scenario_id: int) -> Scenario:
    for s in scenario_catalog():
        if s.id == scenario_id:
            return s
    raise ValueError(f"scenario must be in 1..12, got {scenario_id!r}")


@dataclass(frozen=True)
class GenConfig:
    params: BdgdParams
    n: int
    seed: int = 0
    method: str = "recipe"
    mixing: str | float = "odds"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("sample size n must be at least 2")
        if self.method not in ("recipe", "exact"):
            raise ValueError("method must be 'recipe' or 'exact'")
        mixing_probability(self.params.phi, self.mixing)

    @classmethod
    def for_scenario(cls, scenario_id: int, n: int, seed: int = 0, **kw) -> "GenConfig":
        return cls(get_scenario(scenario_id).params, n, seed, **kw)


def mixing_probability(phi: float, mixing="odds") -> float:
    """Success probability of the cure-status mixing draw."""
    if mixing == "odds":
        return min(phi / (phi + 1.0), 1.0 - MIX_EPS)
    if mixing == "raw":
        if phi > 1:
            raise ValueError("raw Bernoulli(phi) mixing is undefined for phi > 1")
        return phi
    p = float(mixing)
    if not 0 <= p <= 1:
        raise ValueError("explicit mixing probability must lie in [0, 1]")
    return p


def _stream_key(seed: int, attempt: int) -> np.ndarray:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, attempt]).generate_state(2, dtype=np.uint64)


def subject_uniforms(seed: int, start: int, stop: int, attempt: int = 0) -> np.ndarray:
    """Uniform block of subjects ``start..stop-1``, shape ``(stop - start, DRAWS_PER_SUBJECT)``."""
    bg = np.random.Philox(key=_stream_key(seed, attempt))
    # one Philox counter step yields four 64-bit words, i.e. four doubles
    bg.advance(start * DRAWS_PER_SUBJECT // 4)
    return np.random.Generator(bg).random((stop - start, DRAWS_PER_SUBJECT))


@dataclass
class Latent:
    """Generator internals kept for instrumentation and tests."""

    t1_star: np.ndarray
    t2_star: np.ndarray
    censor1: np.ndarray
    censor2: np.ndarray
    cure1: np.ndarray
    cure2: np.ndarray
    w: np.ndarray
    attempts: int


def _inverse_or_inf(margin, level, active):
    ceiling = -math.expm1(-margin.alpha / margin.beta) - dgompertz.BOUNDARY_GAP
    ok = active & (level > 0) & (level < ceiling)
    out = np.full(level.shape, np.inf)
    if ok.any():
        out[ok] = dgompertz.inverse_cdf(margin, level[ok])
    return out


def _latent_times(p: BdgdParams, U: np.ndarray, method: str, p_mix: float):
    rho1 = dgompertz.cure_rate(p.m1)
    rho2 = dgompertz.cure_rate(p.m2)
    noncure1 = U[:, _M1] < 1.0 - rho1
    u1 = U[:, _U1] * (1.0 - rho1)
    if method == "recipe":
        noncure2 = U[:, _M2] < 1.0 - rho2
        u2 = U[:, _U2] * (1.0 - rho2)
        mix = U[:, _K] < p_mix
        # solve dC/du(u1, w) = u2 for w, then cap at the defective ceiling
        w = np.minimum(clayton.conditional_quantile(p.phi, np.maximum(u1, 1e-300), np.maximum(u2, 1e-300)), 1.0 - rho2)
        K = np.where(mix, noncure1, noncure2)
    else:
        s1 = np.where(noncure1, 1.0 - u1, np.maximum(U[:, _U1] * rho1, 1e-300))
        s2 = clayton.conditional_quantile(p.phi, s1, np.maximum(U[:, _U2], 1e-300))
        w = 1.0 - s2
        K = s2 > rho2
    t1_star = _inverse_or_inf(p.m1, u1, noncure1)
    t2_star = _inverse_or_inf(p.m2, w, K)
    return t1_star, t2_star, ~noncure1, ~np.isfinite(t2_star), w


def _censor(t_star, draws):
    finite = np.isfinite(t_star)
    upper = t_star[finite].max()
    c = draws * upper
    t = np.minimum(t_star, c)
    delta = (t_star < c).astype(np.int8)
    return t, delta, c


def generate_with_latent(config: GenConfig) -> tuple[Dataset, Latent]:
    p = config.params
    p_mix = mixing_probability(p.phi, config.mixing)
    for attempt in range(MAX_RETRIES):
        U = subject_uniforms(config.seed, 0, config.n, attempt)
        t1_star, t2_star, cure1, cure2, w = _latent_times(p, U, config.method, p_mix)
        if np.isfinite(t1_star).any() and np.isfinite(t2_star).any():
            break
        warnings.warn(f"all subjects cured in one margin (attempt {attempt + 1}); regenerating", RuntimeWarning)
    else:
        raise RuntimeError(f"no finite latent time in a margin after {MAX_RETRIES} attempts")
    t1, d1, c1 = _censor(t1_star, U[:, _C1])
    t2, d2, c2 = _censor(t2_star, U[:, _C2])
    latent = Latent(t1_star, t2_star, c1, c2, cure1, cure2, w, attempt + 1)
    return Dataset(t1, d1, t2, d2), latent


def generate(config: GenConfig) -> Dataset:
    """Draw one censored bivariate sample of size ``config.n``."""
    return generate_with_latent(config)[0]
