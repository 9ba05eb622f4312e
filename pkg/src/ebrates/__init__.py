"""Empirical-Bayes shrinkage of many binomial rates (beta-binomial model)."""
from __future__ import annotations

__version__ = "0.1.0"

from .distributions import BetaParams, RateSample, RngState, fit_beta_moments, moments_to_beta
from .errors import ConvergenceError, DegenerateError, DomainError, EbratesError, InputError, SimulationError
from .estimators import (
    EstimateRecord,
    TownObservation,
    efron_morris,
    estimate_towns,
    james_stein_zero,
    pooled_variance,
    posterior,
    shrinkage_estimate,
)
from .ingestion import Dataset, load_csv, load_dataset, save_dataset
from .intervals import Interval, credible_interval, wald_interval
from .simulation import SimulationConfig, SimulationSummary, run_simulation
from .specfun import beta_quantile, log_beta, log_gamma, reg_inc_beta

__all__ = [
    "BetaParams", "RateSample", "RngState", "fit_beta_moments", "moments_to_beta",
    "EbratesError", "DomainError", "DegenerateError", "ConvergenceError", "InputError", "SimulationError",
    "TownObservation", "EstimateRecord", "posterior", "shrinkage_estimate", "pooled_variance",
    "james_stein_zero", "efron_morris", "estimate_towns",
    "Dataset", "load_csv", "load_dataset", "save_dataset",
    "Interval", "wald_interval", "credible_interval",
    "SimulationConfig", "SimulationSummary", "run_simulation",
    "log_gamma", "log_beta", "reg_inc_beta", "beta_quantile",
]
