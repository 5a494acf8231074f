"""Command-line entry point: ``defectiva fit|bayes|simulate|study``.

Every run writes its data files plus ``manifest.json`` into ``--out-dir``.
Data files depend only on inputs, flags and seed; wall-clock information is
confined to the manifest.

Exit codes: 0 success, 2 configuration error, 3 input schema error,
4 convergence failure (monotone likelihood or optimiser did not converge).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, dgompertz
from .bayes import McmcConfig, PriorBox, run_mcmc, write_chain_csv
from .bdgd import BdgdParams
from .errors import DataError, DomainError, McmcError
from .io import read_dataset_csv, sha256_file, write_columns_csv, write_dataset_csv
from .mle import FitConfig, fit
from .nonparam import UnivariateSample, binned_hazard, kaplan_meier
from .simulate import GenConfig, generate
from .study import (
    FULL_GRID_SIZES,
    StudyConfig,
    export_boxplot_series,
    run_study,
    tau_summary,
    write_boxplot_csv,
    write_study_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SCHEMA = 3
EXIT_CONVERGENCE = 4

GRID_POINTS = 200


class ConfigError(ValueError):
    pass


def _floats(text: str, count: int | None = None, what: str = "value list") -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(values) != count:
        raise ConfigError(f"{what}: expected {count} numbers, got {len(values)}")
    return values


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated integers, got {text!r}") from None


def _params(text: str) -> BdgdParams:
    values = _floats(text, 5, "parameters alpha1,beta1,alpha2,beta2,phi")
    try:
        return BdgdParams(*values)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _curve_files(data, estimates: BdgdParams, out: Path) -> list[str]:
    written = []
    for j, (t, d, margin) in enumerate(
        ((data.t1, data.delta1, estimates.m1), (data.t2, data.delta2, estimates.m2)), start=1
    ):
        grid = np.linspace(0.0, 1.05 * float(t.max()), GRID_POINTS)
        name = f"fitted_margin{j}.csv"
        write_columns_csv(out / name, ("time", "survival", "hazard"), grid,
                          dgompertz.survival(margin, grid), dgompertz.hazard(margin, grid))
        written.append(name)
        positive = t > 0
        sample = UnivariateSample(t[positive], d[positive])
        km = kaplan_meier(sample)
        name = f"km_margin{j}.csv"
        write_columns_csv(out / name, ("time", "survival"), np.r_[0.0, km.knots], np.r_[1.0, km.values])
        written.append(name)
        if sample.events.sum() > 0:
            mids, haz = binned_hazard(sample)
            name = f"hazard_margin{j}.csv"
            write_columns_csv(out / name, ("midpoint", "hazard"), mids, haz)
            written.append(name)
    return written


def cmd_fit(args) -> tuple[int, list[str], dict]:
    data = read_dataset_csv(args.input)
    config = FitConfig(
        initial=_params(args.init) if args.init else None,
        confidence_level=args.level,
        max_iterations=args.max_iterations,
    )
    report = fit(data, config)
    out = args.out_dir
    payload = report.to_dict()
    payload["n"] = len(data)
    payload["class_counts"] = data.class_counts()
    _dump_json(payload, out / "fit.json")
    written = ["fit.json"] + _curve_files(data, report.estimates, out)
    code = EXIT_OK if report.converged and not report.monotone_likelihood else EXIT_CONVERGENCE
    return code, written, {"level": args.level, "init": args.init}


def cmd_bayes(args) -> tuple[int, list[str], dict]:
    data = read_dataset_csv(args.input)
    prior = PriorBox.from_flat(_floats(args.prior_box, 10, "--prior-box")) if args.prior_box else PriorBox()
    config = McmcConfig(
        iterations=args.iterations,
        burn_in=args.burn_in,
        thin=args.thin,
        seed=args.seed,
        initial=_params(args.init) if args.init else None,
    )
    summary = run_mcmc(data, prior, config)
    out = args.out_dir
    payload = summary.to_dict()
    payload["prior_box"] = [list(b) for b in prior.bounds]
    _dump_json(payload, out / "posterior.json")
    write_chain_csv(summary, out / "chain.csv")
    written = ["posterior.json", "chain.csv"] + _curve_files(data, summary.medians(), out)
    return EXIT_OK, written, {"prior_box": payload["prior_box"], "iterations": args.iterations,
                              "burn_in": args.burn_in, "thin": args.thin}


def cmd_simulate(args) -> tuple[int, list[str], dict]:
    if args.params:
        params = _params(args.params)
        config = GenConfig(params, args.n, args.seed, method=args.method)
    else:
        config = GenConfig.for_scenario(args.scenario, args.n, args.seed, method=args.method)
    data = generate(config)
    name = args.output or "dataset.csv"
    write_dataset_csv(data, args.out_dir / name)
    return EXIT_OK, [name], {"params": config.params.as_dict(), "n": args.n, "method": args.method}


def cmd_study(args) -> tuple[int, list[str], dict]:
    scenarios = tuple(_ints(args.scenario, "--scenario")) if args.scenario else (1,)
    if args.full_grid:
        sizes, replicates = FULL_GRID_SIZES, 1000
    else:
        sizes = tuple(_ints(args.sizes, "--sizes"))
        replicates = args.replicates
    config = StudyConfig(scenarios=scenarios, sample_sizes=sizes, replicates=replicates, seed=args.seed,
                         method=args.method)
    result = run_study(config)
    out = args.out_dir
    written = []
    for sc in scenarios:
        name = f"study_scenario{sc}.csv"
        write_study_csv(result, sc, out / name)
        written.append(name)
        for param in args.boxplot or ():
            name = f"boxplot_scenario{sc}_{param}.csv"
            write_boxplot_csv(export_boxplot_series(result, param, sc), out / name)
            written.append(name)
    rows = tau_summary(result)
    write_columns_csv(out / "dependence_summary.csv", ("scenario", "n", "mean_tau_k", "mean_tau_s"), *zip(*rows))
    written.append("dependence_summary.csv")
    return EXIT_OK, written, {"scenarios": list(scenarios), "sample_sizes": list(sizes), "replicates": replicates,
                              "method": args.method}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="defectiva", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", type=Path, default=Path("."))

    p = sub.add_parser("fit", help="maximum-likelihood fit of a t1,delta1,t2,delta2 file")
    p.add_argument("input", type=Path)
    p.add_argument("--init", help="alpha1,beta1,alpha2,beta2,phi starting values")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--max-iterations", type=int, default=5000)
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bayes", help="posterior summaries by random-walk Metropolis")
    p.add_argument("input", type=Path)
    p.add_argument("--prior-box", help="lo,hi pairs for alpha1,beta1,alpha2,beta2,phi (10 numbers)")
    p.add_argument("--init", help="alpha1,beta1,alpha2,beta2,phi starting point")
    p.add_argument("--iterations", type=int, default=60_000)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--thin", type=int, default=25)
    common(p)
    p.set_defaults(func=cmd_bayes)

    p = sub.add_parser("simulate", help="generate a censored bivariate sample")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--scenario", type=int, default=1)
    group.add_argument("--params", help="alpha1,beta1,alpha2,beta2,phi")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--method", choices=("recipe", "exact"), default="recipe")
    p.add_argument("--output", help="file name inside --out-dir (default dataset.csv)")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("study", help="Monte-Carlo bias/MSE/coverage study")
    p.add_argument("--scenario", help="comma-separated scenario ids (default 1)")
    p.add_argument("--sizes", default="100,200")
    p.add_argument("--n", dest="sizes", help="alias of --sizes")
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--full-grid", action="store_true", help="n = 50..500 step 25 with 1000 replicates")
    p.add_argument("--method", choices=("recipe", "exact"), default="recipe")
    p.add_argument("--boxplot", action="append", help="also export box-plot series for this parameter")
    common(p)
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    inputs = {}
    if getattr(args, "input", None) is not None and args.input.exists():
        inputs[str(args.input)] = sha256_file(args.input)
    try:
        code, written, resolved = args.func(args)
    except DataError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ConfigError, DomainError, ValueError, McmcError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = {
        "command": args.command,
        "config": {**resolved, "seed": args.seed},
        "seed": args.seed,
        "version": __version__,
        "inputs": inputs,
        "outputs": written,
        "exit_code": code,
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
    }
    _dump_json(manifest, args.out_dir / "manifest.json")
    if code == EXIT_CONVERGENCE:
        print("fit did not converge (see fit.json)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
