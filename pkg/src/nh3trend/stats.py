"""Statistical kernels: simple OLS, Student-t tail probabilities, prediction intervals.

The t distribution is evaluated through the regularized incomplete beta
function (modified Lentz continued fraction), so nothing here depends on
scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DegenerateInput, DomainError

# Residuals smaller than this fraction of max|y| are treated as an exact fit.
EXACT_FIT_RTOL = 1e-12

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXIT = 20000


@dataclass(frozen=True)
class OlsFit:
    intercept: float
    slope: float
    n: int
    residual_variance: float
    sxx: float
    predictor_mean: float
    se_intercept: float
    se_slope: float

    @property
    def df(self) -> int:
        return self.n - 2

    def predict(self, x0: float) -> float:
        return self.intercept + self.slope * x0


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    level: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"interval lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def zero_width(self) -> bool:
        return self.upper == self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def scaled(self, k: float) -> "Interval":
        """Multiply both endpoints by a positive constant."""
        if k < 0:
            raise ValueError("scale factor must be non-negative")
        return Interval(self.lower * k, self.upper * k, self.level)


def ols_fit(xs: Sequence[float], ys: Sequence[float]) -> OlsFit:
    """Least-squares line ``y = intercept + slope * x``.

    The residual variance uses ``n - 2`` degrees of freedom; a two-point fit
    interpolates exactly and gets residual variance 0.

    Raises
    ------
    DegenerateInput
        Fewer than two points, mismatched lengths, or all ``xs`` equal.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise DegenerateInput(f"xs and ys must be 1-d and equal length, got {x.shape} and {y.shape}")
    n = x.size
    if n < 2:
        raise DegenerateInput(f"need at least 2 points, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DegenerateInput("xs and ys must be finite")
    if np.ptp(x) == 0:
        raise DegenerateInput("all xs are equal; slope is undefined")

    xbar = float(x.mean())
    ybar = float(y.mean())
    dx = x - xbar
    sxx = float(dx @ dx)
    slope = float(dx @ (y - ybar)) / sxx
    intercept = ybar - slope * xbar

    resid = y - (intercept + slope * x)
    scale = float(np.max(np.abs(y)))
    if n == 2 or float(np.max(np.abs(resid))) <= EXACT_FIT_RTOL * scale:
        residual_variance = 0.0
    else:
        residual_variance = float(resid @ resid) / (n - 2)

    se_slope = math.sqrt(residual_variance / sxx)
    se_intercept = math.sqrt(residual_variance * (1.0 / n + xbar * xbar / sxx))
    return OlsFit(
        intercept=intercept,
        slope=slope,
        n=int(n),
        residual_variance=residual_variance,
        sxx=sxx,
        predictor_mean=xbar,
        se_intercept=se_intercept,
        se_slope=se_slope,
    )


def _beta_cf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_beta(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta ``I_x(a, b)``.

    ``y`` may carry ``1 - x`` computed without cancellation by the caller.
    """
    if a <= 0 or b <= 0:
        raise DomainError("a and b must be positive")
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, y) / b


def _check_df(df: float) -> float:
    if isinstance(df, bool) or not math.isfinite(df) or df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df!r}")
    return float(df)


def two_sided_p(t: float, df: float) -> float:
    """``P(|T_df| >= |t|)`` for a Student-t variable with ``df`` degrees of freedom."""
    df = _check_df(df)
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t!r}")
    if t == 0:
        return 1.0
    t2 = t * t
    if math.isinf(t2):
        return 0.0
    denom = df + t2
    p = regularized_beta(0.5 * df, 0.5, df / denom, t2 / denom)
    return min(1.0, max(0.0, p))


def t_density(t: float, df: float) -> float:
    df = _check_df(df)
    log_norm = math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df) - 0.5 * math.log(df * math.pi)
    return math.exp(log_norm - 0.5 * (df + 1) * math.log1p(t * t / df))


@lru_cache(maxsize=1024)
def t_quantile(prob: float, df: float) -> float:
    """Inverse CDF of Student-t: the ``q`` with ``P(T_df <= q) = prob``."""
    if not 0.0 < prob < 1.0:
        raise DomainError(f"prob must lie in (0, 1), got {prob!r}")
    df = _check_df(df)
    if prob == 0.5:
        return 0.0
    if prob < 0.5:
        return -t_quantile(1.0 - prob, df)
    target = 2.0 * (1.0 - prob)

    lo, hi = 0.0, 1.0
    while two_sided_p(hi, df) > target:
        lo, hi = hi, hi * 2.0
    t = 0.5 * (lo + hi)
    # Newton on the two-sided tail, kept inside the bracket; d/dt p(t) = -2 f(t).
    for _ in range(200):
        f = two_sided_p(t, df) - target
        if f > 0:
            lo = t
        else:
            hi = t
        dens = t_density(t, df)
        step = f / (2.0 * dens) if dens > 0 else 0.0
        t_new = t + step
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-15 * max(1.0, abs(t)):
            return t_new
        t = t_new
    return t


def slope_t_test(slope: float, se: float, df: int) -> tuple[float, float, bool]:
    """t statistic, two-sided p-value and degenerate flag for a slope estimate.

    A zero standard error gives ``p = 1`` for a zero slope and ``p = 0``
    otherwise, flagged as degenerate in both cases.
    """
    if se == 0.0:
        if slope == 0.0:
            return 0.0, 1.0, True
        return math.copysign(math.inf, slope), 0.0, True
    t = slope / se
    return t, two_sided_p(t, df), False


def prediction_interval(fit: OlsFit, x0: float, level: float) -> Interval:
    """Equal-tailed frequentist prediction interval for a new response at ``x0``.

    Zero residual variance yields a zero-width interval (``Interval.zero_width``).
    """
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level!r}")
    if fit.n < 3:
        raise DegenerateInput(f"prediction interval needs n >= 3, got {fit.n}")
    center = fit.predict(x0)
    if fit.residual_variance == 0.0:
        return Interval(center, center, level)
    q = t_quantile(0.5 * (1.0 + level), fit.df)
    dx = x0 - fit.predictor_mean
    half = q * math.sqrt(fit.residual_variance * (1.0 + 1.0 / fit.n + dx * dx / fit.sxx))
    return Interval(center - half, center + half, level)
