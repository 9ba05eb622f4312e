from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, stats

import oracles
from ebrates.distributions import (
    BetaParams,
    RateSample,
    RngState,
    beta_mean,
    beta_pdf,
    beta_variance,
    fit_beta_moments,
    moments_to_beta,
    sample_binomial,
    sample_binomial_array,
)
from ebrates.errors import DegenerateError, DomainError

# 50-digit mpmath values, frozen before the implementation was written
PDF_0005_5_917 = 173.0556267331457003359624
VAR_5_917 = 5.843536981570001803e-6


@pytest.mark.parametrize("a, b", [(0, 1), (-1, 2), (1, math.inf), (math.nan, 1)])
def test_beta_params_validated(a, b):
    with pytest.raises(DomainError):
        BetaParams(a, b)


@pytest.mark.parametrize("a, b, mean", [(1, 1, 0.5), (2, 6, 0.25), (5, 917, 5 / 922)])
def test_beta_mean(a, b, mean):
    assert beta_mean(BetaParams(a, b)) == pytest.approx(mean, rel=1e-15)
    assert BetaParams(a, b).mean == beta_mean(BetaParams(a, b))


def test_beta_mean_near_published_prior():
    assert beta_mean(BetaParams(5, 917)) == pytest.approx(0.0054, abs=5e-5)


@pytest.mark.parametrize("a, b, var", [(1, 1, 1 / 12), (2, 2, 0.05), (5, 917, VAR_5_917)])
def test_beta_variance(a, b, var):
    assert beta_variance(BetaParams(a, b)) == pytest.approx(var, rel=1e-14)


def test_beta_variance_against_sampling():
    draws = np.random.default_rng(11).beta(5, 917, size=10**6)
    se = VAR_5_917 * math.sqrt(2 / draws.size) * 2  # generous: kurtosis > 3
    assert abs(draws.var(ddof=1) - VAR_5_917) < 4 * se


@pytest.mark.parametrize(
    "x, a, b, dens",
    [(0.5, 1, 1, 1.0), (0.5, 2, 2, 1.5), (0.005, 5, 917, PDF_0005_5_917), (0.0, 2, 2, 0.0), (1.0, 1, 1, 1.0)],
)
def test_beta_pdf(x, a, b, dens):
    assert beta_pdf(x, BetaParams(a, b)) == pytest.approx(dens, rel=1e-13)


def test_beta_pdf_endpoints_and_domain():
    assert beta_pdf(0.0, BetaParams(0.5, 2)) == math.inf
    assert beta_pdf(1.0, BetaParams(2, 0.5)) == math.inf
    with pytest.raises(DomainError):
        beta_pdf(1.5, BetaParams(1, 1))


@pytest.mark.parametrize("a, b", [(2, 2), (5, 917), (24, 1952), (1.5, 3.0)])
def test_beta_pdf_integrates_to_one(a, b):
    prior = BetaParams(a, b)
    sd = math.sqrt(beta_variance(prior))
    pts = [min(max(prior.mean + k * sd, 1e-9), 1 - 1e-9) for k in (-3, 0, 3)]
    total, _ = integrate.quad(lambda t: beta_pdf(t, prior), 0, 1, points=pts, limit=400)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_moments_to_beta_uniform():
    got = moments_to_beta(0.5, 1 / 12)
    assert got.alpha == pytest.approx(1.0, rel=1e-12)
    assert got.beta == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("a, b", [(5, 917), (1, 1), (0.3, 40), (2000, 3)])
def test_moments_round_trip(a, b):
    prior = BetaParams(a, b)
    got = moments_to_beta(beta_mean(prior), beta_variance(prior))
    assert got.alpha == pytest.approx(a, rel=1e-9)
    assert got.beta == pytest.approx(b, rel=1e-9)


@pytest.mark.parametrize(
    "mean, var, exc",
    [
        (0.0, 0.01, DomainError),
        (1.0, 0.01, DomainError),
        (0.3, 0.0, DegenerateError),
        (0.5, 0.25, DegenerateError),
        (0.5, 0.3, DegenerateError),
    ],
)
def test_moments_to_beta_errors(mean, var, exc):
    with pytest.raises(exc):
        moments_to_beta(mean, var)


def test_rate_sample_statistics_match_two_pass():
    values = np.random.default_rng(3).beta(5, 917, size=500)
    s = RateSample(tuple(values))
    assert s.mean == pytest.approx(values.mean(), rel=1e-14)
    assert s.variance == pytest.approx(oracles.sample_variance_two_pass(list(values)), rel=1e-12)


def test_rate_sample_validation():
    with pytest.raises(DomainError):
        RateSample((0.1,))
    with pytest.raises(DomainError):
        RateSample((0.1, 1.2))


def test_fit_constant_rates_is_degenerate():
    with pytest.raises(DegenerateError):
        fit_beta_moments(RateSample((0.01, 0.01, 0.01)))


def test_fit_zero_rates_is_domain_error():
    with pytest.raises(DomainError):
        fit_beta_moments(RateSample((0.0, 0.0, 0.0)))


def test_fit_recovers_uniform():
    draws = np.random.default_rng(5).uniform(size=200_000)
    got = fit_beta_moments(RateSample(tuple(draws)))
    assert got.alpha == pytest.approx(1.0, rel=0.02)
    assert got.beta == pytest.approx(1.0, rel=0.02)


def test_fit_recovers_published_prior_from_a_million_draws():
    draws = np.random.default_rng(2016).beta(5, 917, size=10**6)
    got = fit_beta_moments(RateSample(tuple(draws)))
    assert abs(got.alpha - 5) / 5 < 0.05
    assert abs(got.beta - 917) / 917 < 0.05


# -- binomial sampler -----------------------------------------------------------


def test_binomial_edges():
    rng = RngState(1)
    assert sample_binomial(100, 0.0, rng) == 0
    assert sample_binomial(100, 1.0, rng) == 100


@pytest.mark.parametrize("n, p", [(0, 0.5), (10, -0.1), (10, 1.1), (10.5, 0.5)])
def test_binomial_domain(n, p):
    with pytest.raises(DomainError):
        sample_binomial(n, p, RngState(0))


def test_binomial_mean():
    n, p = 1054, 0.0054
    draws = sample_binomial_array(np.full(10**6, n), p, RngState(9))
    se = math.sqrt(n * p * (1 - p) / draws.size)
    assert abs(draws.mean() - n * p) < 3 * se


def _pooled_chisquare(observed, expected, min_expected=5.0):
    """Merge adjacent cells until each expects at least ``min_expected``."""
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    obs[-1] += o_acc
    exp[-1] += e_acc
    return stats.chisquare(obs, exp)


@pytest.mark.parametrize("n, p", [(10, 0.3), (1000, 0.005), (658390, 0.005)])
def test_binomial_goodness_of_fit(n, p):
    draws = sample_binomial_array(np.full(100_000, n), p, RngState(42, n))
    pmf = oracles.binomial_pmf(n, p)
    counts = np.bincount(draws, minlength=n + 1)
    res = _pooled_chisquare(counts, pmf * draws.size)
    assert res.pvalue > 0.001


def test_rng_streams_reproducible_and_distinct():
    a = RngState(7, 3).generator.integers(0, 2**32, 8)
    b = RngState(7, 3).generator.integers(0, 2**32, 8)
    c = RngState(7, 4).generator.integers(0, 2**32, 8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_clone_continues_from_same_position():
    r = RngState(5)
    r.generator.random(10)
    twin = r.clone()
    assert np.array_equal(r.generator.random(5), twin.generator.random(5))
    assert r.substream(2) == RngState(5, 2)


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5])
def test_rng_seed_validated(seed):
    with pytest.raises(DomainError):
        RngState(seed)
