"""Statistical primitives used by the insight detectors.

p-values are computed from regularized incomplete gamma/beta functions
implemented here (series + continued-fraction evaluation); no statistical
tables. Moments are population (n^-1) moments throughout.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

_EPS = 1e-15
_FPMIN = 1e-300
_MAX_ITER = 500


def _gamma_series(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x) by series expansion."""
    ap = a
    total = term = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _gamma_cf(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) by continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def _beta_cf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x < 0 or x > 1:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def chi2_sf(statistic: float, df: float) -> float:
    """Survival function of the chi-square distribution."""
    if statistic < 0:
        return 1.0
    return gammainc_upper(df / 2.0, statistic / 2.0)


def _t_tail_mass(t: float, df: float) -> float:
    """P(|T| > |t|), computed from whichever tail avoids cancellation."""
    t2 = t * t
    # df/(df+t2) rounds to 1.0 for tiny t; form the complement directly
    xc = t2 / (df + t2)
    if xc < 0.5:
        return 1.0 - betainc(0.5, df / 2.0, xc)
    return betainc(df / 2.0, 0.5, df / (df + t2))


def t_sf(t: float, df: float) -> float:
    """Survival function of Student's t distribution."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    p = 0.5 * _t_tail_mass(t, df)
    return p if t >= 0 else 1.0 - p


def t_two_sided(t: float, df: float) -> float:
    """Two-sided p-value for a t statistic."""
    if math.isinf(t):
        return 0.0
    return _t_tail_mass(t, df)


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def pop_std(values: np.ndarray) -> float:
    """Population (n^-1) standard deviation."""
    return float(np.sqrt(np.mean((values - np.mean(values)) ** 2)))


def skewness(values: np.ndarray) -> float:
    """Population skewness: n^-1 sum((b_i - mu)^3) / sigma^3.

    Evaluated as sqrt(n)·Σd³/(Σd²)^1.5 — one division keeps the simple
    integer cases exact in floating point.
    """
    d = values - np.mean(values)
    s2 = float(np.sum(d * d))
    if s2 == 0.0:
        raise ValueError("zero variance")
    n = len(values)
    return float(math.sqrt(n) * np.sum(d**3) / s2**1.5)


def kurtosis(values: np.ndarray) -> float:
    """Population (non-excess) kurtosis: n^-1 sum((b_i - mu)^4) / sigma^4.

    Evaluated as n·Σd⁴/(Σd²)² — one division keeps the simple integer
    cases exact in floating point.
    """
    d = values - np.mean(values)
    s2 = float(np.sum(d * d))
    if s2 == 0.0:
        raise ValueError("zero variance")
    n = len(values)
    return float(n * np.sum(d**4) / (s2 * s2))


def quantile_r7(values: Sequence[float], q: float) -> float:
    """Linear-interpolation (R-7) quantile."""
    xs = sorted(float(v) for v in values)
    if not xs:
        raise ValueError("empty sequence")
    h = (len(xs) - 1) * q
    lo = int(math.floor(h))
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation via population covariance over sigma_x sigma_y."""
    mx, my = float(np.mean(x)), float(np.mean(y))
    sx, sy = pop_std(x), pop_std(y)
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance")
    return float(np.mean((x - mx) * (y - my)) / (sx * sy))


def pearson_p(r: float, n: int) -> float:
    """Two-sided p-value of a Pearson correlation (t-test, n-2 dof)."""
    if n < 3:
        raise ValueError("need at least 3 points")
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return t_two_sided(t, n - 2)


def ols_trend(values: np.ndarray) -> tuple[float, float, float]:
    """OLS of value against index: (slope, r_squared, two-sided slope p).

    Zero-variance input is reported as (0, 0, 1): no trend by convention.
    """
    n = len(values)
    if n < 3:
        raise ValueError("need at least 3 points")
    x = np.arange(n, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    sxx = float(np.sum((x - x.mean()) ** 2))
    syy = float(np.sum((y - y.mean()) ** 2))
    if syy == 0.0:
        return 0.0, 0.0, 1.0
    sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
    slope = sxy / sxx
    sse = syy - slope * sxy
    r2 = 1.0 - sse / syy
    if sse <= 0.0:
        return slope, 1.0, 0.0
    se = math.sqrt(sse / (n - 2) / sxx)
    t = slope / se
    return slope, r2, t_two_sided(t, n - 2)


def welch_t(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Welch two-sample t-test: (statistic, two-sided p).

    Uses sample (n-1) variances; the degenerate both-sides-constant case is
    reported as (inf, 0) when the means differ and (0, 1) otherwise.
    """
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("each side needs at least 2 points")
    ma, mb = float(np.mean(a)), float(np.mean(b))
    va = float(np.var(a, ddof=1))
    vb = float(np.var(b, ddof=1))
    if va == 0.0 and vb == 0.0:
        if ma == mb:
            return 0.0, 1.0
        return math.inf if ma > mb else -math.inf, 0.0
    sa, sb = va / na, vb / nb
    t = (ma - mb) / math.sqrt(sa + sb)
    df_num = (sa + sb) ** 2
    df_den = 0.0
    if va > 0:
        df_den += sa**2 / (na - 1)
    if vb > 0:
        df_den += sb**2 / (nb - 1)
    df = df_num / df_den
    return t, t_two_sided(t, df)


def chi2_independence(table: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Pearson chi-square test of independence on a contingency matrix.

    Returns (statistic, p, expected). Caller is responsible for the
    expected-count precondition.
    """
    table = np.asarray(table, dtype=np.float64)
    total = table.sum()
    if total <= 0:
        raise ValueError("table sums to zero")
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / total
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (table - expected) ** 2 / expected
    statistic = float(np.nansum(terms))
    df = (table.shape[0] - 1) * (table.shape[1] - 1)
    return statistic, chi2_sf(statistic, df), expected


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Exact backward recursion of the discounted cumulative reward."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    total = 0.0
    for r in reversed(list(rewards)):
        total = r + gamma * total
    return total
