"""Beta and binomial distributions: moments, density, moment fitting and
exact, reproducible binomial sampling."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, DomainError
from .specfun import log_beta

__all__ = [
    "BetaParams",
    "RateSample",
    "RngState",
    "beta_mean",
    "beta_variance",
    "beta_pdf",
    "fit_beta_moments",
    "moments_to_beta",
    "sample_binomial",
    "sample_binomial_array",
]


@dataclass(frozen=True)
class BetaParams:
    """Shape pair of a Beta(alpha, beta) law, used both as prior and posterior."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"BetaParams.{name} must be positive and finite, got {v!r}")

    @property
    def mean(self) -> float:
        return beta_mean(self)

    @property
    def variance(self) -> float:
        return beta_variance(self)


@dataclass(frozen=True)
class RateSample:
    """Pooled per-town MLEs. Sample variance uses the m - 1 denominator."""

    rates: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if len(rates) < 2:
            raise DomainError(f"a rate sample needs at least 2 values, got {len(rates)}")
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise DomainError("rates must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.rates)

    @property
    def mean(self) -> float:
        return math.fsum(self.rates) / len(self.rates)

    @property
    def variance(self) -> float:
        if min(self.rates) == max(self.rates):
            # exact, whereas the rounded mean would leave ~1e-35 behind
            return 0.0
        mu = self.mean
        return math.fsum((r - mu) ** 2 for r in self.rates) / (len(self.rates) - 1)


@dataclass
class RngState:
    """Reproducible random stream identified by ``(seed, stream)``.

    Each ``(seed, stream)`` pair maps to an independent PCG64 substream via
    numpy's ``SeedSequence`` spawn keys. The state advances as it is used;
    do not share one instance between threads. Use :meth:`clone` or
    :meth:`substream` instead.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and 0 <= v < 2**64):
                raise DomainError(f"RngState.{name} must be a 64-bit unsigned integer, got {v!r}")

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def clone(self) -> "RngState":
        """Copy including the current position in the stream."""
        out = RngState(self.seed, self.stream)
        if self._gen is not None:
            out._gen = copy.deepcopy(self._gen)
        return out

    def substream(self, stream: int) -> "RngState":
        return RngState(self.seed, stream)


def beta_mean(p: BetaParams) -> float:
    return p.alpha / (p.alpha + p.beta)


def beta_variance(p: BetaParams) -> float:
    s = p.alpha + p.beta
    return p.alpha * p.beta / (s * s * (s + 1.0))


def beta_pdf(x: float, p: BetaParams) -> float:
    """Beta density at ``x``; may be ``inf`` at an endpoint when a shape is
    below one."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    a, b = p.alpha, p.beta
    if (x == 0.0 and a < 1.0) or (x == 1.0 and b < 1.0):
        return math.inf
    if (x == 0.0 and a > 1.0) or (x == 1.0 and b > 1.0):
        return 0.0
    la = 0.0 if a == 1.0 else (a - 1.0) * math.log(x)
    lb = 0.0 if b == 1.0 else (b - 1.0) * math.log1p(-x)
    return math.exp(la + lb - log_beta(a, b))


def moments_to_beta(mean: float, var: float) -> BetaParams:
    """Beta law with the given mean and variance."""
    if not 0.0 < mean < 1.0:
        raise DomainError(f"sample mean must lie in (0, 1), got {mean!r}")
    if not var > 0.0:
        raise DegenerateError("sample variance is zero; a beta prior cannot be fitted")
    if var >= mean * (1.0 - mean):
        raise DegenerateError(
            f"sample variance {var:.6g} >= mean*(1-mean) = {mean * (1 - mean):.6g}; "
            "moments are incompatible with a beta law"
        )
    alpha = ((1.0 - mean) / var - 1.0 / mean) * mean * mean
    beta = alpha * (1.0 - mean) / mean
    return BetaParams(alpha, beta)


def fit_beta_moments(sample: RateSample) -> BetaParams:
    """Method-of-moments beta fit to pooled rates.

    Zeros and ones in the sample are fine; they only enter through the mean
    and variance.
    """
    if not isinstance(sample, RateSample):
        sample = RateSample(tuple(sample))
    return moments_to_beta(sample.mean, sample.variance)


def _check_binomial_args(n, p):
    if np.any(np.asarray(n) < 1):
        raise DomainError("binomial n must be >= 1")
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0.0) & (p <= 1.0))):
        raise DomainError("binomial p must lie in [0, 1]")


def sample_binomial(n: int, p: float, rng: RngState) -> int:
    """One exact Binomial(n, p) draw.

    numpy's generator uses sequential-search inversion when n*min(p, 1-p) is
    small and the BTPE rejection algorithm otherwise; neither approximates.
    """
    if int(n) != n:
        raise DomainError(f"binomial n must be an integer, got {n!r}")
    _check_binomial_args(n, p)
    return int(rng.generator.binomial(int(n), float(p)))


def sample_binomial_array(n, p, rng: RngState) -> np.ndarray:
    """Elementwise draws for arrays of trial counts and probabilities."""
    _check_binomial_args(n, p)
    return rng.generator.binomial(np.asarray(n, dtype=np.int64), np.asarray(p, dtype=float))
