"""Independent reference computations used by the test-suite.

Nothing here imports from ``ebrates``: the incomplete beta comes from
adaptive quadrature of the density, quantiles from bisection on that
quadrature, and the normal quantile from mpmath.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate


def beta_logpdf(t: float, a: float, b: float) -> float:
    lb = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return (a - 1.0) * math.log(t) + (b - 1.0) * math.log1p(-t) - lb


def ibeta_quad(x: float, a: float, b: float) -> float:
    """I_x(a, b) by adaptive quadrature, integrating the tail that does not
    contain x = mean so the returned value carries absolute error ~1e-13.

    A segment touching 0 (a < 1) or 1 (b < 1) has an integrable singularity;
    it is integrated with the algebraic weight rule, which carries the
    singular factor analytically.
    """
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lb = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

    def f(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        return math.exp(beta_logpdf(t, a, b))

    def f_no_left(t):  # density without t^(a-1)
        return math.exp((b - 1.0) * math.log1p(-t) - lb)

    def f_no_right(t):  # density without (1-t)^(b-1)
        return math.exp((a - 1.0) * math.log(t) - lb) if t > 0.0 else 0.0

    def segment(lo, hi):
        opts = dict(epsabs=1e-15, epsrel=1e-13, limit=500)
        if lo == 0.0 and a < 1.0:
            return integrate.quad(f_no_left, lo, hi, weight="alg", wvar=(a - 1.0, 0.0), **opts)[0]
        if hi == 1.0 and b < 1.0:
            return integrate.quad(f_no_right, lo, hi, weight="alg", wvar=(0.0, b - 1.0), **opts)[0]
        return integrate.quad(f, lo, hi, **opts)[0]

    mean = a / (a + b)
    sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))
    marks = [mean + k * sd for k in (-12, -6, -3, -1, 0, 1, 3, 6, 12)]
    if x <= mean:
        edges = [0.0] + [p for p in marks if 0.0 < p < x] + [x]
        return math.fsum(segment(lo, hi) for lo, hi in zip(edges, edges[1:]))
    edges = [x] + [p for p in marks if x < p < 1.0] + [1.0]
    return 1.0 - math.fsum(segment(lo, hi) for lo, hi in zip(edges, edges[1:]))


def beta_quantile_bisect(p: float, a: float, b: float, iters: int = 200) -> float:
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ibeta_quad(mid, a, b) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi)


def normal_quantile(q: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(q) - 1))


def squared_loss_naive(truths, estimates) -> float:
    total = 0.0
    for t, e in zip(truths, estimates):
        diff = t - e
        total += diff * diff
    return total


def coverage_naive(truths, lowers, uppers) -> float:
    hits = 0
    for t, lo, hi in zip(truths, lowers, uppers):
        if lo <= t and t <= hi:
            hits += 1
    return hits / len(truths)


def sample_variance_two_pass(values) -> float:
    m = len(values)
    mean = sum(values) / m
    return sum((v - mean) ** 2 for v in values) / (m - 1)


def binomial_pmf(n: int, p: float) -> np.ndarray:
    k = np.arange(n + 1)
    logc = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in k])
    with np.errstate(divide="ignore"):
        return np.exp(logc + k * math.log(p) + (n - k) * math.log1p(-p))
