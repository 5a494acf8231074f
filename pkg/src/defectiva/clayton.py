"""Clayton copula pieces used to join two survival margins.

``C(u, v) = (u^-phi + v^-phi - 1)^(-1/phi)`` with ``phi > 0``. The same
algebraic form serves as the survival copula joining ``S1`` and ``S2`` and as
the copula integrated for Spearman's rho; the family is exchangeable, so the
distinction does not change any value computed here.

Everything is evaluated through ``-phi * log(u)`` so that large ``phi`` and
small ``u`` never pass through an overflowing power, and small ``phi`` keeps
full relative precision (the independence limit is reached smoothly).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import kendalltau

from .errors import DomainError, QuadratureError


def check_phi(phi) -> float:
    phi = float(phi)
    if not (math.isfinite(phi) and phi > 0):
        raise DomainError(f"Clayton dependence parameter must be positive and finite, got {phi!r}")
    return phi


def _unit(x, *, closed_right: bool):
    x = np.asarray(x, dtype=float)
    upper_ok = (x <= 1) if closed_right else (x < 1)
    if not np.all((x > 0) & upper_ok):
        interval = "(0, 1]" if closed_right else "(0, 1)"
        raise DomainError(f"copula argument must lie in {interval}")
    return x


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def log_generator_sum(a, b):
    """``log(e^a + e^b - 1)`` for ``a, b >= 0`` without overflow or cancellation."""
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    # e^hi + e^lo - 1 = e^hi (1 + e^(lo-hi) (1 - e^-lo))
    return hi + np.log1p(np.exp(lo - hi) * -np.expm1(-lo))


def log_joint_survival_from_logs(phi: float, log_u, log_v):
    """``log C(u, v)`` given ``log u`` and ``log v`` (both ``<= 0``)."""
    s = log_generator_sum(-phi * log_u, -phi * log_v)
    return -s / phi


def joint_survival(phi, u, v):
    """Clayton copula value; equals ``u`` when ``v == 1`` and vice versa."""
    phi = check_phi(phi)
    u = _unit(u, closed_right=True)
    v = _unit(v, closed_right=True)
    return _out(np.exp(log_joint_survival_from_logs(phi, np.log(u), np.log(v))))


def log_density_factor_from_logs(phi: float, log_u, log_v):
    s = log_generator_sum(-phi * log_u, -phi * log_v)
    return math.log1p(phi) - (1.0 + phi) * (log_u + log_v) - (2.0 + 1.0 / phi) * s


def copula_density_factor(phi, u, v):
    """Mixed partial ``d2C/du dv``; the factor multiplying ``f1 f2`` in the joint density."""
    phi = check_phi(phi)
    u = _unit(u, closed_right=False)
    v = _unit(v, closed_right=False)
    return _out(np.exp(log_density_factor_from_logs(phi, np.log(u), np.log(v))))


def log_conditional_from_logs(phi: float, log_u, log_v):
    s = log_generator_sum(-phi * log_u, -phi * log_v)
    return -(phi + 1.0) * log_u - (1.0 + 1.0 / phi) * s


def conditional_given_u(phi, u, v):
    """``dC/du``: the distribution function of ``V`` given ``U = u``, evaluated at ``v``."""
    phi = check_phi(phi)
    u = _unit(u, closed_right=False)
    v = _unit(v, closed_right=False)
    return _out(np.exp(log_conditional_from_logs(phi, np.log(u), np.log(v))))


def conditional_quantile(phi, u, q):
    """Solve ``conditional_given_u(phi, u, v) = q`` for ``v`` (closed form)."""
    phi = check_phi(phi)
    u = _unit(u, closed_right=True)
    q = _unit(q, closed_right=True)
    # v^-phi - 1 = u^-phi (q^(-phi/(1+phi)) - 1)
    with np.errstate(divide="ignore"):
        log_rhs = -phi * np.log(u) + np.log(np.expm1(-phi / (1.0 + phi) * np.log(q)))
    log_v = -np.logaddexp(0.0, log_rhs) / phi
    return _out(np.exp(log_v))


def kendall_tau(phi) -> float:
    phi = check_phi(phi)
    return phi / (phi + 2.0)


def kendall_tau_derivative(phi) -> float:
    phi = check_phi(phi)
    return 2.0 / (phi + 2.0) ** 2


def phi_from_kendall_tau(tau: float) -> float:
    if not 0 < tau < 1:
        raise DomainError("Clayton only represents Kendall tau in (0, 1)")
    return 2.0 * tau / (1.0 - tau)


def _copula_on_open_square(phi, u, v):
    return np.exp(log_joint_survival_from_logs(phi, np.log(u), np.log(v)))


def adaptive_gauss_legendre_2d(func, tol=1e-6, *, order=10, initial=4, max_panels=200_000):
    """Integrate ``func(x, y)`` (vectorised) over the unit square.

    Tensor-product Gauss-Legendre on square panels. Each panel estimate is
    compared with the sum over its four children; panels whose disagreement
    exceeds their share of ``tol`` are split again. Returns the refined total.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    w2 = np.outer(weights, weights).ravel()
    nx = np.repeat(nodes, order)
    ny = np.tile(nodes, order)

    def panel_integrals(x0, y0, h):
        xs = x0[:, None] + h[:, None] * nx[None, :]
        ys = y0[:, None] + h[:, None] * ny[None, :]
        return (func(xs, ys) * w2[None, :]).sum(axis=1) * h * h

    def children(x0, y0, h):
        half = h / 2
        cx = np.concatenate([x0, x0 + half, x0, x0 + half])
        cy = np.concatenate([y0, y0, y0 + half, y0 + half])
        ch = np.concatenate([half, half, half, half])
        return cx, cy, ch

    grid = (np.arange(initial) / initial).astype(float)
    x0 = np.repeat(grid, initial)
    y0 = np.tile(grid, initial)
    h = np.full(x0.shape, 1.0 / initial)
    coarse = panel_integrals(x0, y0, h)

    total = 0.0
    evaluated = x0.size
    while x0.size:
        cx, cy, ch = children(x0, y0, h)
        fine = panel_integrals(cx, cy, ch)
        k = x0.size
        fine_sum = fine[:k] + fine[k : 2 * k] + fine[2 * k : 3 * k] + fine[3 * k :]
        err = np.abs(fine_sum - coarse)
        # area-weighted share of the global budget
        done = err <= tol * (h * h)
        total += float(fine_sum[done].sum())
        keep = np.tile(~done, 4)
        x0, y0, h, coarse = cx[keep], cy[keep], ch[keep], fine[keep]
        evaluated += x0.size
        if evaluated > max_panels:
            raise QuadratureError(f"adaptive quadrature exceeded {max_panels} panels at tol={tol}")
    return total


def spearman_rho(phi, tol=1e-6) -> float:
    """Spearman's rho of the Clayton copula, ``12 * int C - 3``, by adaptive quadrature."""
    phi = check_phi(phi)
    integral = adaptive_gauss_legendre_2d(lambda u, v: _copula_on_open_square(phi, u, v), tol=tol / 12.0)
    return 12.0 * integral - 3.0


def sample_kendall_tau(pairs) -> float:
    """Sample Kendall tau-b of ``(x, y)`` pairs."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError("need at least two (x, y) pairs")
    tau = kendalltau(arr[:, 0], arr[:, 1], variant="b").statistic
    if not math.isfinite(tau):
        raise ValueError("Kendall tau undefined: one coordinate is constant")
    return float(tau)
