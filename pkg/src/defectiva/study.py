"""Monte-Carlo study of the ML estimator: bias, MSE and interval coverage.

Each (scenario, n) cell repeats generate -> fit ``replicates`` times. Replicate
``r`` of a cell draws its data from a seed derived from
``(seed, scenario, n, r)``, so results do not depend on execution order or on
how many workers run the cell.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bdgd import BdgdParams, derived_quantities
from .mle import FitConfig, fit, z_quantile
from .simulate import GenConfig, generate, get_scenario

TRACKED = ("alpha1", "alpha2", "beta1", "beta2", "rho1", "rho2", "phi")
INTERVAL_PARAMS = TRACKED + ("tau_k",)
FULL_GRID_SIZES = tuple(range(50, 501, 25))
THREADS_ENV = "DEFECTIVA_THREADS"


def coverage_band(replicates: int, nominal: float = 0.95, significance: float = 0.05) -> tuple[float, float]:
    """Acceptance band for an observed coverage proportion (normal approximation to the binomial)."""
    if replicates < 2:
        raise ValueError("need at least two replicates")
    if not 0 < nominal < 1:
        raise ValueError("nominal coverage must lie in (0, 1)")
    half = z_quantile(1.0 - significance) * math.sqrt(nominal * (1.0 - nominal) / replicates)
    return nominal - half, nominal + half


@dataclass(frozen=True)
class StudyConfig:
    scenarios: tuple = (1,)
    sample_sizes: tuple = (100, 200)
    replicates: int = 200
    seed: int = 0
    nominal_coverage: float = 0.95
    method: str = "recipe"
    threads: int | None = None

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("replicates must be at least 2")
        if not self.scenarios or not self.sample_sizes:
            raise ValueError("need at least one scenario and one sample size")
        for s in self.scenarios:
            get_scenario(s)
        if any(n < 2 for n in self.sample_sizes):
            raise ValueError("sample sizes must be at least 2")
        if not 0 < self.nominal_coverage < 1:
            raise ValueError("nominal coverage must lie in (0, 1)")


@dataclass
class ReplicateOutcome:
    status: str  # "ok", "monotone" or "failed"
    estimates: dict = field(default_factory=dict)
    intervals: dict = field(default_factory=dict)
    tau_k: float = float("nan")
    tau_s: float = float("nan")


@dataclass
class ParamSummary:
    bias: float
    mse: float
    coverage: float
    estimates: list


@dataclass
class CellResult:
    scenario: int
    n: int
    truth: dict
    params: dict
    n_ok: int
    n_monotone: int
    n_failed: int
    mean_tau_k: float
    mean_tau_s: float

    @property
    def usable(self) -> bool:
        return self.n_ok > 0


@dataclass
class StudyResult:
    config: StudyConfig
    cells: dict  # (scenario, n) -> CellResult

    def cell(self, scenario: int, n: int) -> CellResult:
        return self.cells[(scenario, n)]


def replicate_seed(seed: int, scenario: int, n: int, replicate: int) -> int:
    ss = np.random.SeedSequence([seed, scenario, n, replicate])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _truth(params: BdgdParams) -> dict:
    dq = derived_quantities(params)
    return {
        "alpha1": params.alpha1,
        "alpha2": params.alpha2,
        "beta1": params.beta1,
        "beta2": params.beta2,
        "rho1": dq.rho1,
        "rho2": dq.rho2,
        "phi": params.phi,
        "tau_k": dq.tau_k,
        "tau_s": dq.tau_s,
    }


def ml_replicate(params: BdgdParams, n: int, seed: int, method: str = "recipe") -> ReplicateOutcome:
    """Generate one sample and fit it, starting the optimiser at the nominal values."""
    try:
        data = generate(GenConfig(params, n, seed, method=method))
        report = fit(data, FitConfig(initial=params))
    except Exception:
        return ReplicateOutcome("failed")
    if report.monotone_likelihood:
        return ReplicateOutcome("monotone")
    est = report.tracked_estimates()
    est["tau_k"] = report.tau_k
    intervals = {name: report.wald_intervals[name] for name in ("alpha1", "alpha2", "beta1", "beta2", "phi")}
    for j, r in enumerate(report.rho_inference, start=1):
        if r.ok:
            intervals[f"rho{j}"] = (r.lo, r.hi)
    intervals["tau_k"] = (report.tau_inference.lo, report.tau_inference.hi)
    return ReplicateOutcome("ok", est, intervals, report.tau_k, report.tau_s)


def _run_one(args):
    fitter, params, n, seed, method = args
    return fitter(params, n, seed, method)


def _threads(config: StudyConfig) -> int:
    if config.threads is not None:
        return max(1, config.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return 1


def summarise_cell(scenario, n, truth, outcomes) -> CellResult:
    ok = [o for o in outcomes if o.status == "ok"]
    params = {}
    for name in INTERVAL_PARAMS:
        est = np.array([o.estimates[name] for o in ok], dtype=float)
        if est.size == 0:
            params[name] = ParamSummary(float("nan"), float("nan"), float("nan"), [])
            continue
        dev = est - truth[name]
        covered = [lo <= truth[name] <= hi for o in ok for lo, hi in [o.intervals.get(name, (np.nan, np.nan))]]
        params[name] = ParamSummary(
            bias=float(dev.mean()),
            mse=float(np.mean(dev**2)),
            coverage=float(np.mean(covered)),
            estimates=est.tolist(),
        )
    return CellResult(
        scenario=scenario,
        n=n,
        truth=truth,
        params=params,
        n_ok=len(ok),
        n_monotone=sum(o.status == "monotone" for o in outcomes),
        n_failed=sum(o.status == "failed" for o in outcomes),
        mean_tau_k=float(np.mean([o.tau_k for o in ok])) if ok else float("nan"),
        mean_tau_s=float(np.mean([o.tau_s for o in ok])) if ok else float("nan"),
    )


def run_study(config: StudyConfig, fitter: Callable[..., ReplicateOutcome] = ml_replicate, progress=None) -> StudyResult:
    """Run every (scenario, n) cell; a cell with no usable replicate is kept but marked unusable."""
    jobs = []
    for sc in config.scenarios:
        params = get_scenario(sc).params
        for n in config.sample_sizes:
            for r in range(config.replicates):
                jobs.append((sc, n, (fitter, params, n, replicate_seed(config.seed, sc, n, r), config.method)))
    workers = _threads(config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, [j[2] for j in jobs], chunksize=4))
    else:
        outcomes = []
        for k, j in enumerate(jobs):
            outcomes.append(_run_one(j[2]))
            if progress is not None:
                progress(k + 1, len(jobs))
    cells = {}
    pos = 0
    for sc in config.scenarios:
        truth = _truth(get_scenario(sc).params)
        for n in config.sample_sizes:
            block = outcomes[pos : pos + config.replicates]
            pos += config.replicates
            cells[(sc, n)] = summarise_cell(sc, n, truth, block)
    return StudyResult(config, cells)


STUDY_COLUMNS = ("n", "parameter", "bias", "mse", "coverage", "band_lo", "band_hi", "n_monotone", "n_failed")


def _fmt(x: float) -> str:
    return repr(float(x))


def study_rows(result: StudyResult, scenario: int):
    band_lo, band_hi = coverage_band(result.config.replicates, result.config.nominal_coverage)
    for n in result.config.sample_sizes:
        cell = result.cell(scenario, n)
        for name in INTERVAL_PARAMS:
            s = cell.params[name]
            yield (n, name, _fmt(s.bias), _fmt(s.mse), _fmt(s.coverage), _fmt(band_lo), _fmt(band_hi),
                   cell.n_monotone, cell.n_failed)


def write_study_csv(result: StudyResult, scenario: int, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STUDY_COLUMNS)
        w.writerows(study_rows(result, scenario))


def export_boxplot_series(result: StudyResult, parameter: str, scenario: int) -> list[tuple]:
    """Long-format rows ``(n, estimate, nominal)`` for box plots across sample sizes."""
    rows = []
    for n in result.config.sample_sizes:
        cell = result.cells.get((scenario, n))
        if cell is None or parameter not in cell.params:
            raise KeyError(f"no cell for scenario {scenario}, n={n}, parameter {parameter!r}")
        nominal = cell.truth[parameter]
        rows.extend((n, est, nominal) for est in cell.params[parameter].estimates)
    if not rows:
        raise ValueError(f"no estimates stored for {parameter!r} in scenario {scenario}")
    return rows


def write_boxplot_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("n", "estimate", "nominal"))
        for n, est, nominal in rows:
            w.writerow((n, _fmt(est), _fmt(nominal)))


def tau_summary(result: StudyResult) -> list[tuple]:
    """Per cell: mean of replicate Kendall and Spearman values implied by the fitted ``phi``."""
    return [(sc, n, c.mean_tau_k, c.mean_tau_s) for (sc, n), c in result.cells.items()]

