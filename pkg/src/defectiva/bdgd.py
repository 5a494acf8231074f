"""Bivariate defective Gompertz model joined by a Clayton survival copula.

The joint survival is ``S(t1, t2) = C(S1(t1), S2(t2))``. A right-censored
subject contributes one of four terms depending on which of its two times were
observed:

======  =======  =======  ===============================
class   delta1   delta2   contribution
======  =======  =======  ===============================
C1      1        1        joint density ``f(t1, t2)``
C2      1        0        ``-dS/dt1``
C3      0        1        ``-dS/dt2``
C4      0        0        joint survival ``S(t1, t2)``
======  =======  =======  ===============================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import clayton, dgompertz
from .dgompertz import DGParams
from .errors import DataError, DomainError, NonFiniteLikelihood

PARAM_NAMES = ("alpha1", "beta1", "alpha2", "beta2", "phi")


@dataclass(frozen=True)
class BdgdParams:
    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    phi: float

    def __post_init__(self):
        # DGParams and check_phi carry the positivity checks
        DGParams(self.alpha1, self.beta1)
        DGParams(self.alpha2, self.beta2)
        clayton.check_phi(self.phi)
        for name in PARAM_NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def m1(self) -> DGParams:
        return DGParams(self.alpha1, self.beta1)

    @property
    def m2(self) -> DGParams:
        return DGParams(self.alpha2, self.beta2)

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES])

    @classmethod
    def from_array(cls, values) -> "BdgdParams":
        values = [float(v) for v in values]
        if len(values) != len(PARAM_NAMES):
            raise ValueError(f"expected {len(PARAM_NAMES)} values ({', '.join(PARAM_NAMES)})")
        return cls(*values)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}


class BivObs(NamedTuple):
    t1: float
    delta1: int
    t2: float
    delta2: int


@dataclass
class Dataset:
    """Column-oriented bivariate right-censored sample."""

    t1: np.ndarray
    delta1: np.ndarray
    t2: np.ndarray
    delta2: np.ndarray
    labels: Sequence[str] | None = None

    def __post_init__(self):
        self.t1 = np.asarray(self.t1, dtype=float)
        self.t2 = np.asarray(self.t2, dtype=float)
        d1 = np.asarray(self.delta1)
        d2 = np.asarray(self.delta2)
        n = self.t1.shape[0] if self.t1.ndim == 1 else -1
        if n < 1 or any(a.shape != (n,) for a in (self.t2, d1, d2)):
            raise DataError("t1, delta1, t2, delta2 must be non-empty 1-d arrays of equal length")
        if self.labels is not None and len(self.labels) != n:
            raise DataError("labels must match the number of observations")
        for name, t in (("t1", self.t1), ("t2", self.t2)):
            bad = np.flatnonzero(~np.isfinite(t) | (t < 0))
            if bad.size:
                raise DataError(f"{name} must be finite and nonnegative", row=int(bad[0]))
        for name, d in (("delta1", d1), ("delta2", d2)):
            bad = np.flatnonzero((d != 0) & (d != 1))
            if bad.size:
                raise DataError(f"{name} must be 0 or 1", row=int(bad[0]))
        self.delta1 = d1.astype(np.int8)
        self.delta2 = d2.astype(np.int8)
        for name, t, d in (("t1", self.t1, self.delta1), ("t2", self.t2, self.delta2)):
            bad = np.flatnonzero((t == 0) & (d == 1))
            if bad.size:
                raise DataError(f"observed event with {name} == 0", row=int(bad[0]))

    @classmethod
    def from_records(cls, records: Sequence[BivObs | tuple], labels=None) -> "Dataset":
        arr = list(records)
        if not arr:
            raise DataError("dataset must contain at least one observation")
        t1, d1, t2, d2 = zip(*arr)
        return cls(np.array(t1), np.array(d1), np.array(t2), np.array(d2), labels=labels)

    def __len__(self) -> int:
        return self.t1.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i) -> BivObs:
        return BivObs(float(self.t1[i]), int(self.delta1[i]), float(self.t2[i]), int(self.delta2[i]))

    def subset(self, index) -> "Dataset":
        labels = None if self.labels is None else [self.labels[i] for i in np.arange(len(self))[index]]
        return Dataset(self.t1[index], self.delta1[index], self.t2[index], self.delta2[index], labels=labels)

    def class_counts(self) -> dict:
        d1, d2 = self.delta1.astype(bool), self.delta2.astype(bool)
        return {
            "C1": int(np.sum(d1 & d2)),
            "C2": int(np.sum(d1 & ~d2)),
            "C3": int(np.sum(~d1 & d2)),
            "C4": int(np.sum(~d1 & ~d2)),
        }

    def censored_fraction(self) -> tuple[float, float]:
        return 1.0 - float(self.delta1.mean()), 1.0 - float(self.delta2.mean())


def _times(t):
    t = np.asarray(t, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise DomainError("time must be nonnegative")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def log_joint_survival(p: BdgdParams, t1, t2):
    ls1 = np.asarray(dgompertz.log_survival(p.m1, _times(t1)))
    ls2 = np.asarray(dgompertz.log_survival(p.m2, _times(t2)))
    return _out(clayton.log_joint_survival_from_logs(p.phi, ls1, ls2))


def joint_survival(p: BdgdParams, t1, t2):
    return _out(np.exp(log_joint_survival(p, t1, t2)))


def joint_cure_fraction(p: BdgdParams) -> float:
    """Plateau of the joint survival as both times grow: ``C(rho1, rho2)``."""
    return math.exp(clayton.log_joint_survival_from_logs(p.phi, -p.alpha1 / p.beta1, -p.alpha2 / p.beta2))


def _require_finite(x):
    flat = np.atleast_1d(x)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise NonFiniteLikelihood(int(bad[0]), float(flat[bad[0]]))
    return x


def log_density(p: BdgdParams, t1, t2):
    """Log joint density: ``log f1 + log f2 + log c(S1, S2)``."""
    t1, t2 = _times(t1), _times(t2)
    with np.errstate(all="ignore"):
        ls1 = dgompertz.log_survival(p.m1, t1)
        ls2 = dgompertz.log_survival(p.m2, t2)
        out = (
            dgompertz.log_density(p.m1, t1)
            + dgompertz.log_density(p.m2, t2)
            + clayton.log_density_factor_from_logs(p.phi, ls1, ls2)
        )
    return _out(_require_finite(out))


def log_partial_t1(p: BdgdParams, t1, t2):
    """Log of ``-dS/dt1`` (first time observed, second censored)."""
    t1, t2 = _times(t1), _times(t2)
    with np.errstate(all="ignore"):
        ls1 = dgompertz.log_survival(p.m1, t1)
        ls2 = dgompertz.log_survival(p.m2, t2)
        out = dgompertz.log_density(p.m1, t1) + clayton.log_conditional_from_logs(p.phi, ls1, ls2)
    return _out(_require_finite(out))


def log_partial_t2(p: BdgdParams, t1, t2):
    """Log of ``-dS/dt2`` (second time observed, first censored)."""
    t1, t2 = _times(t1), _times(t2)
    with np.errstate(all="ignore"):
        ls1 = dgompertz.log_survival(p.m1, t1)
        ls2 = dgompertz.log_survival(p.m2, t2)
        out = dgompertz.log_density(p.m2, t2) + clayton.log_conditional_from_logs(p.phi, ls2, ls1)
    return _out(_require_finite(out))


def loglik_terms(p: BdgdParams, data: Dataset) -> np.ndarray:
    """Per-observation log-likelihood contributions (may contain non-finite values)."""
    return loglik_terms_array(p.to_array(), data)


def loglik_terms_array(theta, data: Dataset) -> np.ndarray:
    """:func:`loglik_terms` for a raw ``(alpha1, beta1, alpha2, beta2, phi)`` vector; no validation."""
    a1, b1, a2, b2, phi = (float(x) for x in theta)
    # shared per-observation pieces, computed once
    ls1 = (a1 / b1) * np.expm1(-b1 * data.t1)
    ls2 = (a2 / b2) * np.expm1(-b2 * data.t2)
    lf1 = math.log(a1) - b1 * data.t1 + ls1
    lf2 = math.log(a2) - b2 * data.t2 + ls2
    s = clayton.log_generator_sum(-phi * ls1, -phi * ls2)

    d1 = data.delta1.astype(bool)
    d2 = data.delta2.astype(bool)
    out = -s / phi  # C4
    both = d1 & d2
    only1 = d1 & ~d2
    only2 = ~d1 & d2
    if both.any():
        out[both] = (
            lf1[both] + lf2[both] + math.log1p(phi) - (1.0 + phi) * (ls1[both] + ls2[both]) - (2.0 + 1.0 / phi) * s[both]
        )
    k = 1.0 + 1.0 / phi
    if only1.any():
        out[only1] = lf1[only1] - (phi + 1.0) * ls1[only1] - k * s[only1]
    if only2.any():
        out[only2] = lf2[only2] - (phi + 1.0) * ls2[only2] - k * s[only2]
    return out


def loglik(p: BdgdParams, data: Dataset) -> float:
    """Censored-data log-likelihood over all four observation classes.

    A non-finite contribution aborts with :class:`NonFiniteLikelihood` naming
    the offending observation instead of being skipped.
    """
    with np.errstate(all="ignore"):
        terms = loglik_terms(p, data)
    bad = np.flatnonzero(~np.isfinite(terms))
    if bad.size:
        raise NonFiniteLikelihood(int(bad[0]), float(terms[bad[0]]))
    # exact summation, so row order cannot change the result
    return math.fsum(terms)


@dataclass(frozen=True)
class DerivedQuantities:
    rho1: float
    rho2: float
    tau_k: float
    tau_s: float


def derived_quantities(p: BdgdParams, *, spearman_tol: float = 1e-6) -> DerivedQuantities:
    return DerivedQuantities(
        rho1=dgompertz.cure_rate(p.m1),
        rho2=dgompertz.cure_rate(p.m2),
        tau_k=clayton.kendall_tau(p.phi),
        tau_s=clayton.spearman_rho(p.phi, tol=spearman_tol),
    )
