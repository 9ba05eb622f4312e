"""Point estimators for many binomial rates.

Scalar functions take a :class:`TownObservation`; the ``*_array`` variants
work on count and population vectors and are what the simulation uses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import BetaParams
from .errors import DegenerateError, DomainError
from .intervals import Interval, credible_interval, wald_interval

__all__ = [
    "TownObservation",
    "EstimateRecord",
    "mle",
    "posterior",
    "shrinkage_estimate",
    "shrinkage_weight",
    "pooled_variance",
    "pooled_variance_array",
    "james_stein_zero",
    "efron_morris",
    "information_ratios",
    "shrinkage_estimates_array",
    "rank_descending",
    "estimate_towns",
]


@dataclass(frozen=True)
class TownObservation:
    town: str
    year: int
    count: int
    population: int

    def __post_init__(self):
        if self.population < 1:
            raise DomainError(f"{self.town}/{self.year}: population must be >= 1, got {self.population}")
        if not 0 <= self.count <= self.population:
            raise DomainError(
                f"{self.town}/{self.year}: count {self.count} outside [0, population={self.population}]"
            )


@dataclass(frozen=True)
class EstimateRecord:
    town: str
    mle: float
    posterior: BetaParams
    shrinkage: float
    js: float
    delta: float
    info_ratio_success: Optional[float]
    info_ratio_failure: Optional[float]
    population: int = 0
    count: int = 0
    wald: Optional[Interval] = None
    credible: Optional[Interval] = None
    shrinkage_rank: int = 0
    mle_rank: int = 0


def mle(obs: TownObservation) -> float:
    return obs.count / obs.population


def posterior(obs: TownObservation, prior: BetaParams) -> BetaParams:
    """Conjugate update: Beta(alpha + k, beta + n - k)."""
    return BetaParams(prior.alpha + obs.count, prior.beta + obs.population - obs.count)


def shrinkage_estimate(obs: TownObservation, prior: BetaParams) -> float:
    """Posterior mean (alpha + k) / (alpha + beta + n)."""
    return (prior.alpha + obs.count) / (prior.alpha + prior.beta + obs.population)


def shrinkage_weight(obs: TownObservation, prior: BetaParams) -> float:
    """Weight delta of the prior mean, so that
    shrinkage = delta * prior_mean + (1 - delta) * mle."""
    s = prior.alpha + prior.beta
    return s / (s + obs.population)


def shrinkage_estimates_array(counts, populations, prior: BetaParams) -> np.ndarray:
    k = np.asarray(counts, dtype=float)
    n = np.asarray(populations, dtype=float)
    return (prior.alpha + k) / (prior.alpha + prior.beta + n)


def pooled_variance_array(counts, populations) -> float:
    k = np.asarray(counts, dtype=float)
    n = np.asarray(populations, dtype=float)
    if k.size < 2:
        raise DomainError(f"pooled variance needs at least 2 towns, got {k.size}")
    weight = np.sum(n - 1.0)
    if weight <= 0.0:
        raise DegenerateError("pooled variance undefined: every population equals 1")
    return float(np.sum((n - 1.0) * k * (n - k) / n**3) / weight)


def pooled_variance(observations: Sequence[TownObservation]) -> float:
    """Degrees-of-freedom weighted average of the binomial variances
    k(n - k)/n^3."""
    k = [o.count for o in observations]
    n = [o.population for o in observations]
    return pooled_variance_array(k, n)


def _js_factor(spread: float, m: int, pooled_var: float, positive_part: bool) -> float:
    factor = 1.0 - (m - 2) * pooled_var / spread
    if positive_part:
        factor = max(factor, 0.0)
    return factor


def james_stein_zero(rates, pooled_var: float, positive_part: bool = False) -> np.ndarray:
    """James-Stein estimate shrinking every rate toward zero by one common
    factor. The factor is not clamped unless ``positive_part`` is set."""
    r = np.asarray(rates, dtype=float)
    if r.size < 3:
        raise DomainError(f"James-Stein needs at least 3 rates, got {r.size}")
    ss = float(np.sum(r * r))
    if ss <= 0.0:
        raise DegenerateError("James-Stein toward zero undefined: all rates are 0")
    return _js_factor(ss, r.size, pooled_var, positive_part) * r


def efron_morris(rates, pooled_var: float, positive_part: bool = False) -> np.ndarray:
    """James-Stein shrinkage toward the grand mean of the rates."""
    r = np.asarray(rates, dtype=float)
    if r.size < 3:
        raise DomainError(f"Efron-Morris needs at least 3 rates, got {r.size}")
    grand = float(np.mean(r))
    dev = r - grand
    ss = float(np.sum(dev * dev))
    if ss <= 0.0:
        raise DegenerateError("Efron-Morris undefined: all rates are equal")
    return grand + _js_factor(ss, r.size, pooled_var, positive_part) * dev


def information_ratios(obs: TownObservation, prior: BetaParams) -> tuple[Optional[float], Optional[float]]:
    """Posterior successes per observed success and posterior failures per
    observed failure; ``None`` where the observed count is zero."""
    k = obs.count
    f = obs.population - obs.count
    succ = (prior.alpha + k) / k if k > 0 else None
    fail = (prior.beta + f) / f if f > 0 else None
    return succ, fail


def rank_descending(values: Sequence[float], towns: Sequence[str]) -> list[int]:
    """1-based ranks, highest value first; ties go to the smaller town id."""
    order = sorted(range(len(values)), key=lambda i: (-values[i], towns[i]))
    ranks = [0] * len(values)
    for pos, i in enumerate(order, start=1):
        ranks[i] = pos
    return ranks


def estimate_towns(
    observations: Sequence[TownObservation],
    prior: BetaParams,
    level: Optional[float] = 0.95,
    positive_part: bool = False,
) -> list[EstimateRecord]:
    """Every point estimate for one year's towns, in the input order.

    ``js`` is the Efron-Morris variant so it shrinks toward the same point as
    the posterior mean. Wald and credible intervals are attached unless
    ``level`` is None.
    """
    rates = [mle(o) for o in observations]
    js = efron_morris(rates, pooled_variance(observations), positive_part=positive_part)
    shrink = [shrinkage_estimate(o, prior) for o in observations]
    towns = [o.town for o in observations]
    s_rank = rank_descending(shrink, towns)
    m_rank = rank_descending(rates, towns)
    out = []
    for i, o in enumerate(observations):
        succ, fail = information_ratios(o, prior)
        post = posterior(o, prior)
        wald = cred = None
        if level is not None:
            wald = wald_interval(o, level)
            cred = credible_interval(post, level)
        out.append(
            EstimateRecord(
                town=o.town,
                mle=rates[i],
                posterior=post,
                shrinkage=shrink[i],
                js=float(js[i]),
                delta=shrinkage_weight(o, prior),
                info_ratio_success=succ,
                info_ratio_failure=fail,
                population=o.population,
                count=o.count,
                wald=wald,
                credible=cred,
                shrinkage_rank=s_rank[i],
                mle_rank=m_rank[i],
            )
        )
    return out

