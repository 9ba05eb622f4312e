"""Wald confidence intervals and equal-tailed beta credible intervals."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DomainError
from .specfun import beta_quantile, beta_quantile_array

__all__ = [
    "IntervalKind",
    "Interval",
    "normal_quantile",
    "wald_interval",
    "credible_interval",
    "wald_bounds",
    "credible_bounds",
]


class IntervalKind(str, enum.Enum):
    WALD = "wald"
    CREDIBLE = "credible"


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    level: float
    kind: IntervalKind

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise DomainError(f"interval lower {self.lower} exceeds upper {self.upper}")
        if self.kind is IntervalKind.CREDIBLE and not (0.0 <= self.lower and self.upper <= 1.0):
            raise DomainError("credible interval endpoints must lie in [0, 1]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        """Endpoints count as inside."""
        return self.lower <= value <= self.upper


def _check_level(level: float) -> float:
    level = float(level)
    if not 0.0 < level < 1.0:
        raise DomainError(f"interval level must lie in (0, 1), got {level!r}")
    return level


def normal_quantile(q: float) -> float:
    return NormalDist().inv_cdf(q)


def wald_bounds(counts, populations, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Wald endpoints, clamped to [0, 1]."""
    level = _check_level(level)
    z = normal_quantile(0.5 * (1.0 + level))
    n = np.asarray(populations, dtype=float)
    p = np.asarray(counts, dtype=float) / n
    half = z * np.sqrt(p * (1.0 - p) / n)
    return np.clip(p - half, 0.0, 1.0), np.clip(p + half, 0.0, 1.0)


def wald_interval(obs, level: float = 0.95) -> Interval:
    """Normal-approximation interval around k/n.

    Collapses to a point when k is 0 or n, a well-known weakness kept on
    purpose.
    """
    level = _check_level(level)
    z = normal_quantile(0.5 * (1.0 + level))
    p = obs.count / obs.population
    half = z * math.sqrt(p * (1.0 - p) / obs.population)
    return Interval(max(p - half, 0.0), min(p + half, 1.0), level, IntervalKind.WALD)


def credible_interval(post, level: float = 0.95) -> Interval:
    """Equal-tailed interval between the (1-level)/2 and (1+level)/2
    posterior quantiles."""
    level = _check_level(level)
    lo = beta_quantile(0.5 * (1.0 - level), post.alpha, post.beta)
    hi = beta_quantile(0.5 * (1.0 + level), post.alpha, post.beta)
    return Interval(lo, hi, level, IntervalKind.CREDIBLE)


def credible_bounds(alpha, beta, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized credible endpoints for arrays of posterior shapes."""
    level = _check_level(level)
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    lo = beta_quantile_array(0.5 * (1.0 - level), a, b)
    hi = beta_quantile_array(0.5 * (1.0 + level), a, b)
    return lo, hi
