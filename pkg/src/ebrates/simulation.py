"""Monte Carlo risk and coverage study.

Every replication draws its counts from its own random substream keyed by
``(seed, replication index)``, so results do not depend on how replications
are scheduled across workers.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .distributions import BetaParams, RngState, moments_to_beta
from .errors import DegenerateError, DomainError, SimulationError
from .estimators import TownObservation, efron_morris, pooled_variance_array
from .intervals import credible_bounds, wald_bounds

__all__ = [
    "TruthSet",
    "SimulationConfig",
    "SimulationSummary",
    "build_truths",
    "synthetic_towns",
    "total_squared_loss",
    "internal_coverage",
    "run_simulation",
    "LOSS_COLUMNS",
    "COVERAGE_COLUMNS",
]

log = logging.getLogger(__name__)

LOSS_COLUMNS = ("loss_mle", "loss_shrinkage", "loss_js")
COVERAGE_COLUMNS = ("coverage_wald", "coverage_credible")
MAX_FAILED_FRACTION = 0.001
# stream ids at or above this are reserved for non-replication draws
SYNTHETIC_STREAM = 2**63


class TruthSet(NamedTuple):
    towns: list[str]
    truths: np.ndarray
    populations: np.ndarray


@dataclass(frozen=True)
class SimulationConfig:
    truths: Sequence[float]
    populations: Sequence[int]
    replications: int
    level: float = 0.95
    seed: int = 0
    refit_prior_each_rep: bool = True
    # used only when refit_prior_each_rep is False
    prior: Optional[BetaParams] = None
    positive_part: bool = False

    def __post_init__(self):
        truths = np.asarray(self.truths, dtype=float)
        pops = np.asarray(self.populations)
        if truths.ndim != 1 or truths.shape != pops.shape:
            raise DomainError("truths and populations must be 1-d and of equal length")
        if truths.size < 3:
            raise DomainError(f"need at least 3 towns, got {truths.size}")
        if np.any((truths < 0) | (truths > 1)):
            raise DomainError("truths must lie in [0, 1]")
        if not np.all(np.equal(np.mod(pops, 1), 0)) or np.any(pops < 1):
            raise DomainError("populations must be positive integers")
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise DomainError("level must lie in (0, 1)")
        if not self.refit_prior_each_rep and self.prior is None:
            raise DomainError("a frozen prior must be supplied when refit_prior_each_rep is False")


@dataclass
class SimulationSummary:
    replications: int
    risk_mle: float
    risk_shrinkage: float
    risk_js: float
    coverage_wald: float
    coverage_credible: float
    loss_samples: np.ndarray
    coverage_samples: np.ndarray
    mc_standard_errors: dict[str, float]
    failed_replications: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        """JSON-ready view without the raw sample arrays."""

        def clean(v):
            return None if v is None or not math.isfinite(v) else float(v)

        return {
            "replications": self.replications,
            "risk": {
                "mle": self.risk_mle,
                "shrinkage": self.risk_shrinkage,
                "js": self.risk_js,
            },
            "coverage": {
                "wald": self.coverage_wald,
                "credible": self.coverage_credible,
            },
            "mc_standard_errors": {k: clean(v) for k, v in self.mc_standard_errors.items()},
            "failed_count": len(self.failed_replications),
            "failed_replications": list(self.failed_replications),
        }


def build_truths(history: Sequence[TownObservation], reference_year: int = 2016) -> TruthSet:
    """Per-town unweighted mean of yearly rates, with reference-year
    populations. Towns are ordered by identifier."""
    if not history:
        raise DomainError("empty history")
    by_town: dict[str, list[TownObservation]] = {}
    for o in history:
        by_town.setdefault(o.town, []).append(o)
    towns = sorted(by_town)
    missing = [t for t in towns if not any(o.year == reference_year for o in by_town[t])]
    if missing:
        shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise DomainError(f"{len(missing)} town(s) lack reference year {reference_year}: {shown}")
    truths = np.array([math.fsum(o.count / o.population for o in by_town[t]) / len(by_town[t]) for t in towns])
    pops = np.array(
        [next(o.population for o in by_town[t] if o.year == reference_year) for t in towns],
        dtype=np.int64,
    )
    return TruthSet(towns, truths, pops)


def synthetic_towns(
    m: int = 430,
    seed: int = 0,
    alpha: float = 5.0,
    beta: float = 917.0,
    pop_range: tuple[float, float] = (250.0, 700_000.0),
) -> TruthSet:
    """Towns with Beta(alpha, beta) rates and log-uniform populations."""
    gen = RngState(seed, SYNTHETIC_STREAM).generator
    truths = gen.beta(alpha, beta, size=m)
    lo, hi = pop_range
    pops = np.rint(np.exp(gen.uniform(math.log(lo), math.log(hi), size=m))).astype(np.int64)
    towns = [f"town{i:04d}" for i in range(m)]
    return TruthSet(towns, truths, pops)


def total_squared_loss(truths, estimates) -> float:
    t = np.asarray(truths, dtype=float)
    e = np.asarray(estimates, dtype=float)
    if t.shape != e.shape:
        raise DomainError(f"length mismatch: {t.shape} vs {e.shape}")
    d = t - e
    return float(np.dot(d, d))


def internal_coverage(truths, intervals) -> float:
    """Fraction of truths lying inside their interval, endpoints inclusive."""
    t = np.asarray(truths, dtype=float)
    if len(intervals) != t.size:
        raise DomainError(f"length mismatch: {t.size} truths vs {len(intervals)} intervals")
    lo = np.array([iv.lower for iv in intervals])
    hi = np.array([iv.upper for iv in intervals])
    return _coverage(t, lo, hi)


def _coverage(t, lo, hi) -> float:
    return float(np.mean((lo <= t) & (t <= hi)))


def _replicate(r: int, cfg: SimulationConfig, theta: np.ndarray, n: np.ndarray):
    """Losses and coverages of one replication, or None if it degenerates."""
    k = RngState(cfg.seed, r).generator.binomial(n, theta)
    mle = k / n
    try:
        if cfg.refit_prior_each_rep:
            prior = moments_to_beta(float(mle.mean()), float(mle.var(ddof=1)))
        else:
            prior = cfg.prior
        js = efron_morris(mle, pooled_variance_array(k, n), positive_part=cfg.positive_part)
    except (DegenerateError, DomainError) as exc:
        # all-zero or constant samples leave the moment fit undefined
        log.debug("replication %d failed: %s", r, exc)
        return None
    a_post = prior.alpha + k
    b_post = prior.beta + (n - k)
    shrink = a_post / (a_post + b_post)
    losses = (
        total_squared_loss(theta, mle),
        total_squared_loss(theta, shrink),
        total_squared_loss(theta, js),
    )
    wl, wu = wald_bounds(k, n, cfg.level)
    cl, cu = credible_bounds(a_post, b_post, cfg.level)
    return losses, (_coverage(theta, wl, wu), _coverage(theta, cl, cu))


def _se(x: np.ndarray) -> float:
    if x.size < 2:
        return math.nan
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def run_simulation(config: SimulationConfig, workers: int = 1) -> SimulationSummary:
    """Run the study; the summary is bit-identical for any ``workers``."""
    theta = np.asarray(config.truths, dtype=float)
    n = np.asarray(config.populations).astype(np.int64)
    R = config.replications
    losses = np.full((R, 3), np.nan)
    coverage = np.full((R, 2), np.nan)

    def run_chunk(idx):
        for r in idx:
            res = _replicate(int(r), config, theta, n)
            if res is not None:
                losses[r], coverage[r] = res

    if workers <= 1:
        run_chunk(range(R))
    else:
        chunks = np.array_split(np.arange(R), min(R, workers * 8))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, chunks))

    failed = [int(r) for r in np.flatnonzero(np.isnan(losses[:, 0]))]
    if len(failed) > MAX_FAILED_FRACTION * R:
        raise SimulationError(
            f"{len(failed)} of {R} replications failed (degenerate moment fit); "
            f"limit is {MAX_FAILED_FRACTION:.1%}"
        )
    if failed:
        log.warning("%d replication(s) failed and were excluded: %s", len(failed), failed[:10])
    ok = ~np.isnan(losses[:, 0])
    L = losses[ok]
    C = coverage[ok]
    risk = L.mean(axis=0)
    cov = C.mean(axis=0)
    se = {
        "risk_mle": _se(L[:, 0]),
        "risk_shrinkage": _se(L[:, 1]),
        "risk_js": _se(L[:, 2]),
        "coverage_wald": _se(C[:, 0]),
        "coverage_credible": _se(C[:, 1]),
        # paired differences; the estimators share every replication's draws
        "diff_js_minus_shrinkage": _se(L[:, 2] - L[:, 1]),
        "diff_mle_minus_js": _se(L[:, 0] - L[:, 2]),
        "diff_credible_minus_wald": _se(C[:, 1] - C[:, 0]),
    }
    return SimulationSummary(
        replications=R,
        risk_mle=float(risk[0]),
        risk_shrinkage=float(risk[1]),
        risk_js=float(risk[2]),
        coverage_wald=float(cov[0]),
        coverage_credible=float(cov[1]),
        loss_samples=losses,
        coverage_samples=coverage,
        mc_standard_errors=se,
        failed_replications=failed,
    )
