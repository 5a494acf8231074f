"""Posterior sampling under independent uniform priors.

Component-wise random-walk Metropolis: each sweep proposes a Gaussian step
for one parameter at a time and accepts with probability
``min(1, exp(delta log posterior))``. Because the priors are flat on a box, the
log posterior is the log-likelihood inside the box and ``-inf`` outside.
Proposal scales are tuned during burn-in only and frozen afterwards.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import clayton
from .bdgd import PARAM_NAMES, BdgdParams, Dataset, loglik_terms_array
from .errors import McmcError

DERIVED_NAMES = ("rho1", "rho2", "tau_k", "tau_s")


@dataclass(frozen=True)
class PriorBox:
    """Uniform ``(lo, hi)`` bounds in parameter order ``alpha1, beta1, alpha2, beta2, phi``."""

    bounds: tuple = ((0.0, 10.0), (0.0, 10.0), (0.0, 10.0), (0.0, 10.0), (0.0, 50.0))

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(b) != len(PARAM_NAMES):
            raise ValueError(f"prior box needs {len(PARAM_NAMES)} (lo, hi) pairs")
        for name, (lo, hi) in zip(PARAM_NAMES, b):
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or not lo < hi:
                raise ValueError(f"invalid prior bounds for {name}: need 0 <= lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def from_flat(cls, values) -> "PriorBox":
        values = [float(v) for v in values]
        if len(values) != 2 * len(PARAM_NAMES):
            raise ValueError("flat prior box needs lo,hi for each of " + ", ".join(PARAM_NAMES))
        return cls(tuple(zip(values[0::2], values[1::2])))

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    def contains(self, theta) -> bool:
        theta = np.asarray(theta)
        return bool(np.all(theta > self.lower) and np.all(theta < self.upper))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 60_000
    burn_in: int = 10_000
    thin: int = 25
    proposal_scales: tuple | None = None
    seed: int = 0
    initial: BdgdParams | None = None
    tune_every: int = 100
    target_acceptance: tuple = (0.25, 0.45)
    spearman_tol: float = 1e-4

    def __post_init__(self):
        if self.iterations < 1 or self.thin < 1 or self.burn_in < 0:
            raise ValueError("iterations and thin must be positive, burn_in nonnegative")
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.proposal_scales is not None:
            if min(self.proposal_scales) <= 0:
                raise ValueError("proposal_scales must be positive")


@dataclass
class ParamSummary:
    median: float
    lo: float
    hi: float
    mean: float
    sd: float


@dataclass
class PosteriorSummary:
    params: dict
    derived: dict
    acceptance_rates: dict
    retained_draws: int
    chain: np.ndarray = field(repr=False)
    iterations: np.ndarray = field(repr=False)
    derived_draws: np.ndarray = field(repr=False)
    proposal_scales: tuple = ()
    diagnostics: dict | None = None

    def medians(self) -> BdgdParams:
        return BdgdParams(*(self.params[name].median for name in PARAM_NAMES))

    def to_dict(self) -> dict:
        def as_row(s):
            return {"median": s.median, "cri": [s.lo, s.hi], "mean": s.mean, "sd": s.sd}

        return {
            "params": {k: as_row(v) for k, v in self.params.items()},
            "derived": {k: as_row(v) for k, v in self.derived.items()},
            "acceptance_rates": self.acceptance_rates,
            "retained_draws": self.retained_draws,
            "proposal_scales": list(self.proposal_scales),
            "diagnostics": self.diagnostics,
        }


def _summarise(draws: np.ndarray, level: float = 0.95) -> ParamSummary:
    a = (1.0 - level) / 2.0
    lo, med, hi = np.quantile(draws, [a, 0.5, 1.0 - a])
    return ParamSummary(float(med), float(lo), float(hi), float(draws.mean()), float(draws.std(ddof=1)))


def _loglik(theta, data) -> float:
    with np.errstate(all="ignore"):
        terms = loglik_terms_array(theta, data)
    total = float(np.sum(terms))
    return total if math.isfinite(total) else np.nan


def _log_post(theta, data, box: PriorBox) -> float:
    if not box.contains(theta):
        return -np.inf
    return _loglik(theta, data)


def _initial_point(data, prior, config):
    if config.initial is not None:
        theta = config.initial.to_array()
        if not prior.contains(theta):
            raise McmcError("initial parameters lie outside the prior box")
        return theta
    from .mle import default_initial

    try:
        theta = default_initial(data).to_array()
    except Exception:
        theta = prior.center()
    if not prior.contains(theta):
        theta = prior.center()
    return theta


@dataclass
class ChainRun:
    """Raw output of :func:`random_walk_metropolis`."""

    chain: np.ndarray
    iterations: np.ndarray
    acceptance: np.ndarray
    scales: np.ndarray


def random_walk_metropolis(log_target, initial, lower, upper, config: McmcConfig) -> ChainRun:
    """Component-wise Gaussian random-walk Metropolis on the box ``(lower, upper)``.

    ``log_target`` may return ``-inf`` or ``nan``; both reject the proposal.
    Points outside the box are rejected without calling ``log_target``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    theta = np.array(initial, dtype=float)
    k = theta.size
    rng = np.random.default_rng(config.seed)
    width = upper - lower

    def log_post(x):
        if np.any(x <= lower) or np.any(x >= upper):
            return -np.inf
        return log_target(x)

    lp = log_post(theta)
    if not math.isfinite(lp):
        raise McmcError(f"log target is not finite at the initial point {theta.tolist()}")
    if config.proposal_scales is not None:
        if len(config.proposal_scales) != k:
            raise McmcError(f"need {k} proposal scales")
        scales = np.array(config.proposal_scales, dtype=float)
    else:
        scales = np.minimum(0.1 * np.abs(theta) + 1e-3 * width, 0.25 * width)
    window_acc = np.zeros(k)
    post_acc = np.zeros(k)
    post_prop = 0
    lo_target, hi_target = config.target_acceptance

    n_keep = (config.iterations - config.burn_in) // config.thin
    chain = np.empty((n_keep, k))
    kept_iter = np.empty(n_keep, dtype=np.int64)
    j = 0
    for it in range(config.iterations):
        steps = rng.standard_normal(k) * scales
        logu = np.log(rng.random(k))
        for i in range(k):
            proposal = theta.copy()
            proposal[i] += steps[i]
            lp_new = log_post(proposal)
            if lp_new - lp >= logu[i]:  # nan and -inf compare False
                theta, lp = proposal, lp_new
                if it < config.burn_in:
                    window_acc[i] += 1
                else:
                    post_acc[i] += 1
        if it < config.burn_in:
            if (it + 1) % config.tune_every == 0:
                rate = window_acc / config.tune_every
                scales = np.where(rate < lo_target, scales * 0.8, np.where(rate > hi_target, scales * 1.25, scales))
                scales = np.minimum(scales, width)
                window_acc[:] = 0
        else:
            post_prop += 1
            if (it - config.burn_in + 1) % config.thin == 0 and j < n_keep:
                chain[j] = theta
                kept_iter[j] = it + 1
                j += 1
    return ChainRun(chain, kept_iter, post_acc / max(post_prop, 1), scales)


def run_mcmc(data: Dataset, prior: PriorBox | None = None, config: McmcConfig | None = None) -> PosteriorSummary:
    """Sample the posterior and summarise medians and central 95% credible intervals."""
    prior = prior or PriorBox()
    config = config or McmcConfig()
    theta = _initial_point(data, prior, config)
    if not math.isfinite(_log_post(theta, data, prior)):
        raise McmcError(f"log-likelihood is not finite at the initial point {theta.tolist()}")
    run = random_walk_metropolis(lambda x: _loglik(x, data), theta, prior.lower, prior.upper, config)
    chain, kept_iter, rates, scales = run.chain, run.iterations, run.acceptance, run.scales
    n_keep = chain.shape[0]
    for name, r in zip(PARAM_NAMES, rates):
        if r == 0:
            raise McmcError(f"no proposals for {name} were accepted after burn-in")

    derived = np.empty((n_keep, len(DERIVED_NAMES)))
    derived[:, 0] = np.exp(-chain[:, 0] / chain[:, 1])
    derived[:, 1] = np.exp(-chain[:, 2] / chain[:, 3])
    derived[:, 2] = chain[:, 4] / (chain[:, 4] + 2.0)
    derived[:, 3] = [clayton.spearman_rho(phi, tol=config.spearman_tol) for phi in chain[:, 4]]

    diagnostics = None
    if n_keep >= 100:
        try:
            diagnostics = chain_diagnostics(chain)
        except McmcError:
            diagnostics = None
    return PosteriorSummary(
        params={name: _summarise(chain[:, i]) for i, name in enumerate(PARAM_NAMES)},
        derived={name: _summarise(derived[:, i]) for i, name in enumerate(DERIVED_NAMES)},
        acceptance_rates={name: float(r) for name, r in zip(PARAM_NAMES, rates)},
        retained_draws=n_keep,
        chain=chain,
        iterations=kept_iter,
        derived_draws=derived,
        proposal_scales=tuple(float(s) for s in scales),
        diagnostics=diagnostics,
    )


def _autocorr(x: np.ndarray) -> np.ndarray:
    n = x.size
    x = x - x.mean()
    f = np.fft.rfft(x, n=2 * n)
    acov = np.fft.irfft(f * np.conj(f))[:n] / n
    return acov / acov[0]


def effective_sample_size(x) -> float:
    """ESS with the autocorrelation sum truncated at the first nonpositive pair sum."""
    x = np.asarray(x, dtype=float)
    n = x.size
    rho = _autocorr(x)
    total = 0.0
    for t in range(0, n - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair <= 0:
            break
        total += pair
    # initial positive sequence: tau = -1 + 2 * sum of pair sums
    tau = max(-1.0 + 2.0 * total, 1.0 / n)
    return n / tau


def chain_diagnostics(chain) -> dict:
    """Per-parameter ESS, lag-1 autocorrelation and split-half mean discrepancy."""
    chain = np.asarray(chain, dtype=float)
    if chain.ndim == 1:
        chain = chain[:, None]
    n = chain.shape[0]
    if n < 100:
        raise McmcError(f"need at least 100 retained draws for diagnostics, got {n}")
    names = PARAM_NAMES if chain.shape[1] == len(PARAM_NAMES) else tuple(f"x{i}" for i in range(chain.shape[1]))
    out = {}
    for name, col in zip(names, chain.T):
        sd = col.std(ddof=1)
        if not sd > 0:
            raise McmcError(f"chain for {name} has zero variance")
        half = n // 2
        out[name] = {
            "ess": float(effective_sample_size(col)),
            "lag1": float(_autocorr(col)[1]),
            "split_half": float(abs(col[:half].mean() - col[half:].mean()) / sd),
        }
    return out


def merge_chains(summaries, max_split_half: float = 0.5) -> np.ndarray:
    """Stack retained draws of independent chains once each passes the split-half check."""
    for s in summaries:
        diag = s.diagnostics or chain_diagnostics(s.chain)
        worst = max(d["split_half"] for d in diag.values())
        if worst > max_split_half:
            raise McmcError(f"chain fails split-half check ({worst:.3f} > {max_split_half})")
    return np.vstack([s.chain for s in summaries])


def write_chain_csv(summary: PosteriorSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("iteration",) + PARAM_NAMES)
        for it, row in zip(summary.iterations, summary.chain):
            w.writerow([int(it)] + [repr(float(v)) for v in row])
