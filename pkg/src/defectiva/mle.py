"""Maximum-likelihood fitting of the bivariate defective Gompertz model.

The five parameters are optimised as logs with Nelder-Mead, which keeps them
positive without a constrained optimiser. Standard errors come from a
central-difference Hessian taken in the original parameterisation, so Wald and
delta-method intervals are on the scale the parameters are reported on.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtri

from . import clayton, dgompertz
from .bdgd import PARAM_NAMES, BdgdParams, Dataset, loglik_terms_array
from .dgompertz import DGParams

MARGIN_INDEX = ((0, 1), (2, 3))


def z_quantile(level: float) -> float:
    """Two-sided normal critical value for a ``level`` confidence interval."""
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level!r}")
    return float(ndtri(1.0 - (1.0 - level) / 2.0))


@dataclass(frozen=True)
class FitConfig:
    initial: BdgdParams | None = None
    max_iterations: int = 5000
    simplex_tolerance: float = 1e-8
    hessian_step: float = 1e-4
    confidence_level: float = 0.95
    simplex_scale: float = 0.10
    log_bound: float = 15.0
    restarts: int = 2
    space: str = "log"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not (self.simplex_tolerance > 0 and self.hessian_step > 0 and self.simplex_scale > 0):
            raise ValueError("tolerances and steps must be positive")
        if not 0 < self.confidence_level < 1:
            raise ValueError("confidence_level must lie strictly inside (0, 1)")
        if self.space not in ("log", "original"):
            raise ValueError("space must be 'log' or 'original'")


@dataclass(frozen=True)
class TransformedInference:
    """Point estimate, standard error and interval of a derived quantity."""

    estimate: float
    se: float
    lo: float
    hi: float
    truncated: bool = False
    ok: bool = True


@dataclass
class FitReport:
    estimates: BdgdParams
    loglik_at_max: float
    converged: bool
    monotone_likelihood: bool
    std_errors: dict | None = None
    wald_intervals: dict | None = None
    covariance: np.ndarray | None = None
    rho_inference: tuple | None = None
    tau_inference: TransformedInference | None = None
    rho: tuple = ()
    tau_k: float = float("nan")
    tau_s: float | None = None
    confidence_level: float = 0.95
    iterations: int = 0
    evaluations: int = 0
    message: str = ""
    hessian: np.ndarray | None = field(default=None, repr=False)

    def tracked_estimates(self) -> dict:
        """The seven quantities the simulation study summarises."""
        e = self.estimates
        return {
            "alpha1": e.alpha1,
            "alpha2": e.alpha2,
            "beta1": e.beta1,
            "beta2": e.beta2,
            "rho1": self.rho[0],
            "rho2": self.rho[1],
            "phi": e.phi,
        }

    def to_dict(self) -> dict:
        out = {
            "estimates": self.estimates.as_dict(),
            "loglik_at_max": self.loglik_at_max,
            "converged": self.converged,
            "monotone_likelihood": self.monotone_likelihood,
            "confidence_level": self.confidence_level,
            "rho1": self.rho[0],
            "rho2": self.rho[1],
            "tau_k": self.tau_k,
            "tau_s": self.tau_s,
            "std_errors": self.std_errors,
            "wald_intervals": None
            if self.wald_intervals is None
            else {k: list(v) for k, v in self.wald_intervals.items()},
            "covariance": None if self.covariance is None else self.covariance.tolist(),
            "rho_inference": None
            if self.rho_inference is None
            else {f"rho{j + 1}": asdict(r) for j, r in enumerate(self.rho_inference)},
            "tau_inference": None if self.tau_inference is None else asdict(self.tau_inference),
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "message": self.message,
        }
        return out


def _interval(estimate, se, z, clip=None):
    lo, hi = estimate - z * se, estimate + z * se
    truncated = False
    if clip is not None:
        c_lo, c_hi = clip
        if lo < c_lo or hi > c_hi:
            truncated = True
            lo, hi = max(lo, c_lo), min(hi, c_hi)
    return lo, hi, truncated


def delta_method_cure(estimates: BdgdParams, covariance, level: float = 0.95) -> tuple:
    """Delta-method inference for both cure rates ``rho_j = exp(-alpha_j / beta_j)``.

    Intervals are clipped to ``[0, 1]`` and flagged when clipping happened. A
    negative propagated variance marks that margin ``ok=False``.
    """
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (5, 5):
        raise ValueError("covariance must be 5x5 in parameter order " + ", ".join(PARAM_NAMES))
    z = z_quantile(level)
    theta = estimates.to_array()
    out = []
    for ia, ib in MARGIN_INDEX:
        a, b = theta[ia], theta[ib]
        rho = math.exp(-a / b)
        grad = rho * np.array([-1.0 / b, a / b**2])
        block = cov[np.ix_([ia, ib], [ia, ib])]
        var = float(grad @ block @ grad)
        if var < 0 or not math.isfinite(var):
            out.append(TransformedInference(rho, float("nan"), float("nan"), float("nan"), ok=False))
            continue
        se = math.sqrt(var)
        lo, hi, truncated = _interval(rho, se, z, clip=(0.0, 1.0))
        out.append(TransformedInference(rho, se, lo, hi, truncated))
    return tuple(out)


def delta_method_tau(phi_hat: float, var_phi: float, level: float = 0.95) -> TransformedInference:
    """Kendall's tau ``phi / (phi + 2)`` with its delta-method standard error."""
    if var_phi < 0:
        raise ValueError("variance of phi must be nonnegative")
    tau = clayton.kendall_tau(phi_hat)
    se = clayton.kendall_tau_derivative(phi_hat) * math.sqrt(var_phi)
    lo, hi, truncated = _interval(tau, se, z_quantile(level), clip=(0.0, 1.0))
    return TransformedInference(tau, se, lo, hi, truncated)


def numerical_hessian(func, theta, rel_step=1e-4) -> np.ndarray:
    """Central-difference Hessian of ``func`` at ``theta`` with steps relative to each coordinate."""
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    h = rel_step * np.maximum(np.abs(theta), 1e-8)
    f0 = func(theta)
    H = np.empty((k, k))
    for i in range(k):
        e_i = np.zeros(k)
        e_i[i] = h[i]
        H[i, i] = (func(theta + e_i) - 2.0 * f0 + func(theta - e_i)) / h[i] ** 2
        for j in range(i):
            e_j = np.zeros(k)
            e_j[j] = h[j]
            H[i, j] = H[j, i] = (
                func(theta + e_i + e_j) - func(theta + e_i - e_j) - func(theta - e_i + e_j) + func(theta - e_i - e_j)
            ) / (4.0 * h[i] * h[j])
    return H


def _margin_loglik(log_ab, t, d):
    la, lb = np.clip(log_ab, -30.0, 30.0)
    b = math.exp(lb)
    with np.errstate(all="ignore"):
        ls = math.exp(la - lb) * np.expm1(-b * t)
        val = float(np.sum(ls + d * (la - b * t)))
    return val if math.isfinite(val) else -np.inf


def fit_margin(t, delta) -> DGParams:
    """Univariate censored-data ML fit of one defective Gompertz margin."""
    t = np.asarray(t, dtype=float)
    d = np.asarray(delta, dtype=float)
    events = d.sum()
    exposure = t.sum()
    rate = max(events, 0.5) / max(exposure, 1e-12)
    cens = min(max(1.0 - d.mean(), 0.05), 0.95)
    x0 = np.log([rate, -rate / math.log(cens)])
    res = minimize(lambda x: -_margin_loglik(x, t, d), x0, method="Nelder-Mead",
                   options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
    a, b = np.exp(np.clip(res.x, -15, 15))
    return DGParams(a, b)


def default_initial(data: Dataset) -> BdgdParams:
    """Warm start: independent margin fits plus ``phi`` inverted from the sample Kendall tau."""
    m1 = fit_margin(data.t1, data.delta1)
    m2 = fit_margin(data.t2, data.delta2)
    try:
        tau = clayton.sample_kendall_tau(np.column_stack([data.t1, data.t2]))
    except ValueError:
        tau = 0.2
    tau = min(max(tau, 0.05), 0.9)
    return BdgdParams(m1.alpha, m1.beta, m2.alpha, m2.beta, clayton.phi_from_kendall_tau(tau))


class _Escaped(Exception):
    pass


def _loglik_vector(theta, data):
    if np.any(~(theta > 0)) or np.any(~np.isfinite(theta)):
        return -np.inf
    with np.errstate(all="ignore"):
        terms = loglik_terms_array(theta, data)
    total = float(np.sum(terms))
    return total if math.isfinite(total) else -np.inf


def fit(data: Dataset, config: FitConfig | None = None) -> FitReport:
    """Maximise the censored log-likelihood and attach Wald and delta-method inference.

    ``monotone_likelihood`` is raised when the search drifts beyond
    ``exp(+-log_bound)`` in any coordinate or the negative Hessian at the
    optimum is not positive definite; intervals are withheld in that case.
    """
    config = config or FitConfig()
    initial = config.initial or default_initial(data)
    bound = config.log_bound
    evaluations = 0

    if config.space == "log":
        to_theta = np.exp
        from_theta = np.log
    else:
        to_theta = from_theta = np.asarray

    def objective(x):
        nonlocal evaluations
        evaluations += 1
        return -_loglik_vector(to_theta(x), data)

    last = {}

    def watch(intermediate_result):
        last["x"] = intermediate_result.x
        if np.any(np.abs(np.log(to_theta(intermediate_result.x))) > bound):
            raise _Escaped

    x = from_theta(initial.to_array())
    escaped = False
    iterations = 0
    converged = False
    message = ""
    best = objective(x)
    for _ in range(1 + config.restarts):
        theta0 = to_theta(x)
        vertices = [x]
        for i in range(5):
            t = theta0.copy()
            t[i] *= 1.0 + config.simplex_scale
            vertices.append(from_theta(t))
        try:
            res = minimize(
                objective,
                x,
                method="Nelder-Mead",
                callback=watch,
                options={
                    "initial_simplex": np.array(vertices),
                    "maxiter": config.max_iterations,
                    "maxfev": 4 * config.max_iterations,
                    "xatol": 1e-9,
                    "fatol": config.simplex_tolerance,
                },
            )
        except _Escaped:
            # report where the search was heading, not where it started
            x, best = last["x"], objective(last["x"])
            escaped = True
            message = "parameter left the admissible log range"
            break
        iterations += res.nit
        converged = bool(res.success)
        message = res.message
        improved = best - res.fun
        if res.fun <= best:
            x, best = res.x, res.fun
        if np.any(np.abs(np.log(to_theta(x))) > bound):
            escaped = True
            message = "parameter left the admissible log range"
            break
        if improved <= config.simplex_tolerance:
            break

    theta_hat = to_theta(x)
    loglik_max = -best
    level = config.confidence_level
    if escaped or not math.isfinite(loglik_max):
        theta_hat = np.clip(theta_hat, math.exp(-bound), math.exp(bound))
        return _report_without_intervals(theta_hat, loglik_max, level, iterations, evaluations, message)

    estimates = BdgdParams(*theta_hat)
    H = numerical_hessian(lambda th: _loglik_vector(th, data), theta_hat, config.hessian_step)
    covariance = None
    if np.all(np.isfinite(H)):
        try:
            chol = np.linalg.cholesky(-H)
            inv_chol = np.linalg.inv(chol)
            covariance = inv_chol.T @ inv_chol
        except np.linalg.LinAlgError:
            covariance = None
    if covariance is None:
        report = _report_without_intervals(theta_hat, loglik_max, level, iterations, evaluations,
                                           "negative Hessian is not positive definite")
        report.hessian = H
        return report

    se = np.sqrt(np.diag(covariance))
    z = z_quantile(level)
    std_errors = {name: float(s) for name, s in zip(PARAM_NAMES, se)}
    wald = {name: (float(t - z * s), float(t + z * s)) for name, t, s in zip(PARAM_NAMES, theta_hat, se)}
    rho_inf = delta_method_cure(estimates, covariance, level)
    tau_inf = delta_method_tau(estimates.phi, float(covariance[4, 4]), level)
    return FitReport(
        estimates=estimates,
        loglik_at_max=loglik_max,
        converged=converged,
        monotone_likelihood=False,
        std_errors=std_errors,
        wald_intervals=wald,
        covariance=covariance,
        rho_inference=rho_inf,
        tau_inference=tau_inf,
        rho=(dgompertz.cure_rate(estimates.m1), dgompertz.cure_rate(estimates.m2)),
        tau_k=clayton.kendall_tau(estimates.phi),
        tau_s=clayton.spearman_rho(estimates.phi),
        confidence_level=level,
        iterations=iterations,
        evaluations=evaluations,
        message=str(message),
        hessian=H,
    )


def _report_without_intervals(theta_hat, loglik_max, level, iterations, evaluations, message):
    estimates = BdgdParams(*theta_hat)
    return FitReport(
        estimates=estimates,
        loglik_at_max=loglik_max,
        converged=False,
        monotone_likelihood=True,
        rho=(dgompertz.cure_rate(estimates.m1), dgompertz.cure_rate(estimates.m2)),
        tau_k=clayton.kendall_tau(estimates.phi),
        confidence_level=level,
        iterations=iterations,
        evaluations=evaluations,
        message=str(message),
    )
