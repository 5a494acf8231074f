"""Bivariate defective Gompertz survival model with a Clayton copula."""

__version__ = "0.1.0"

from .bdgd import BdgdParams, BivObs, Dataset, derived_quantities, loglik
from .dgompertz import DGParams
from .mle import FitConfig, FitReport, fit
from .simulate import GenConfig, generate, scenario_catalog

__all__ = [
    "BdgdParams",
    "BivObs",
    "DGParams",
    "Dataset",
    "FitConfig",
    "FitReport",
    "GenConfig",
    "derived_quantities",
    "fit",
    "generate",
    "loglik",
    "scenario_catalog",
]
