"""Standard normal and chi-square quantiles, self-contained.

Only the pieces the integrity tests need: the normal quantile and the
chi-square CDF and quantile.  Accuracy is close to double precision.
"""
from __future__ import annotations

import math
from functools import lru_cache

# Acklam's rational approximation coefficients.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_ppf(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be in (0, 1): {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # One Halley step brings the approximation to full precision.
    for _ in range(2):
        if p < 0.5:
            err = normal_cdf(x) - p
        else:
            # cdf(x) - p written through the survival function for tail accuracy.
            err = (1.0 - p) - 0.5 * math.erfc(x / math.sqrt(2.0))
        u = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
        x = x - u / (1.0 + x * u / 2.0)
    return x


def _gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if x <= 0.0:
        return 0.0
    log_prefix = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(1000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return total * math.exp(log_prefix)
    # Lentz continued fraction for Q(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 - math.exp(log_prefix) * h


def chi2_cdf(x: float, dof: int) -> float:
    return _gamma_p(dof / 2.0, x / 2.0)


@lru_cache(maxsize=1024)
def chi2_ppf(p: float, dof: int) -> float:
    """Chi-square quantile via Wilson-Hilferty start and safeguarded Newton."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be in (0, 1): {p}")
    if dof < 1:
        raise ValueError(f"degrees of freedom must be >= 1: {dof}")
    k = float(dof)
    z = normal_ppf(p)
    h = 2.0 / (9.0 * k)
    x = max(k * (1.0 - h + z * math.sqrt(h)) ** 3, 1e-8)
    lo, hi = 0.0, max(2.0 * x, k + 50.0 * math.sqrt(k) + 100.0)
    while chi2_cdf(hi, dof) < p:
        hi *= 2.0
    half = k / 2.0
    for _ in range(200):
        f = chi2_cdf(x, dof) - p
        if f < 0:
            lo = x
        else:
            hi = x
        pdf = math.exp((half - 1.0) * math.log(x / 2.0) - x / 2.0 - math.lgamma(half)) / 2.0
        step = f / pdf if pdf > 0 else float("inf")
        new = x - step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - x) <= 1e-14 * max(1.0, x):
            return new
        x = new
    return x
