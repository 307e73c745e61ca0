"""Per-station OLS trends with measurement-error-inflated significance.

The trend predictor is the 1-based position in the series (months, or years
after yearly aggregation). Gaps are dropped from the regression. Extra
variance from calibration error (and optionally imputation) widens the slope
standard error without touching the coefficient estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import DegenerateInput, InsufficientData, SeriesTooShort, WrongGranularity
from .series import Granularity, Provenance, StationSeries, YearMonth
from .stats import ols_fit, slope_t_test

DEFAULT_ALPHA = 0.05
DEFAULT_MIN_MONTHS_YEARLY = 6
SWEEP_TAIL = 12


class TrendClass(str, Enum):
    POSITIVE_SIGNIFICANT = "PositiveSignificant"
    NEGATIVE_SIGNIFICANT = "NegativeSignificant"
    POSITIVE_NOT_SIGNIFICANT = "PositiveNotSignificant"
    NEGATIVE_NOT_SIGNIFICANT = "NegativeNotSignificant"
    ZERO_DEGENERATE = "ZeroDegenerate"

    @property
    def significant(self) -> bool:
        return self in (TrendClass.POSITIVE_SIGNIFICANT, TrendClass.NEGATIVE_SIGNIFICANT)

    @property
    def sign(self) -> int:
        if self in (TrendClass.POSITIVE_SIGNIFICANT, TrendClass.POSITIVE_NOT_SIGNIFICANT):
            return 1
        if self is TrendClass.ZERO_DEGENERATE:
            return 0
        return -1


@dataclass(frozen=True)
class TrendFit:
    station_id: str
    provenance: Provenance
    theta0: float
    theta1: float
    n_used: int
    residual_variance: float
    extra_variance: float
    se_naive: float
    se_adjusted: float
    t_naive: float
    t_adjusted: float
    p_naive: float
    p_adjusted: float
    degenerate: bool

    def p_value(self, adjusted: bool) -> float:
        return self.p_adjusted if adjusted else self.p_naive


@dataclass(frozen=True)
class SweepEntry:
    start_index: int
    start: YearMonth
    fit: Optional[TrendFit]
    trend_class: Optional[TrendClass]

    @property
    def insufficient(self) -> bool:
        return self.fit is None


def fit_trend(series: StationSeries, extra_variance: float = 0.0) -> TrendFit:
    """OLS trend of a station series against its time index.

    ``extra_variance`` is added to the residual variance for the adjusted
    standard error; both analyses share degrees of freedom ``n_used - 2``.
    """
    if not extra_variance >= 0 or math.isinf(extra_variance):
        raise ValueError(f"extra_variance must be finite and >= 0, got {extra_variance!r}")
    idx, vals = series.observed()
    if len(vals) < 3:
        raise InsufficientData(f"station {series.station_id}: {len(vals)} observed values, need 3")
    if idx[0] == idx[-1]:
        raise DegenerateInput(f"station {series.station_id}: all values at one time index")
    ols = ols_fit(idx, vals)
    df = ols.n - 2
    se_naive = ols.se_slope
    se_adj = math.sqrt((ols.residual_variance + extra_variance) / ols.sxx)
    t_naive, p_naive, degenerate = slope_t_test(ols.slope, se_naive, df)
    t_adj, p_adj, _ = slope_t_test(ols.slope, se_adj, df)
    return TrendFit(
        station_id=series.station_id,
        provenance=series.provenance,
        theta0=ols.intercept,
        theta1=ols.slope,
        n_used=ols.n,
        residual_variance=ols.residual_variance,
        extra_variance=float(extra_variance),
        se_naive=se_naive,
        se_adjusted=se_adj,
        t_naive=t_naive,
        t_adjusted=t_adj,
        p_naive=p_naive,
        p_adjusted=p_adj,
        degenerate=degenerate,
    )


def classify_values(theta1: float, p: float, alpha: float = DEFAULT_ALPHA) -> TrendClass:
    if theta1 == 0:
        return TrendClass.ZERO_DEGENERATE
    significant = p < alpha
    if theta1 > 0:
        return TrendClass.POSITIVE_SIGNIFICANT if significant else TrendClass.POSITIVE_NOT_SIGNIFICANT
    return TrendClass.NEGATIVE_SIGNIFICANT if significant else TrendClass.NEGATIVE_NOT_SIGNIFICANT


def classify(fit: TrendFit, alpha: float = DEFAULT_ALPHA, use_adjusted: bool = False) -> TrendClass:
    return classify_values(fit.theta1, fit.p_value(use_adjusted), alpha)


def start_date_sweep(
    series: StationSeries,
    extra_variance: float = 0.0,
    alpha: float = DEFAULT_ALPHA,
    use_adjusted: bool = False,
) -> list[SweepEntry]:
    """Refit the trend from every start position ``i = 1 .. N - 12`` to the end.

    Suffixes with fewer than three observations are kept as entries with no
    fit, so entry ``k`` always corresponds to start position ``k + 1``.
    """
    n = len(series)
    if n < SWEEP_TAIL + 3:
        raise SeriesTooShort(f"station {series.station_id}: {n} periods, sweep needs at least {SWEEP_TAIL + 3}")
    entries = []
    for i in range(1, n - SWEEP_TAIL + 1):
        sub = series.suffix(i)
        try:
            fit = fit_trend(sub, extra_variance)
        except InsufficientData:
            entries.append(SweepEntry(i, sub.start, None, None))
            continue
        entries.append(SweepEntry(i, sub.start, fit, classify(fit, alpha, use_adjusted)))
    return entries


def aggregate_yearly(series: StationSeries, min_months: int = DEFAULT_MIN_MONTHS_YEARLY) -> StationSeries:
    """Calendar-year means; years with fewer than ``min_months`` observations become gaps."""
    if series.granularity is not Granularity.MONTHLY:
        raise WrongGranularity(f"station {series.station_id} is already {series.granularity.value}")
    by_year: dict[int, list[float]] = {}
    for period, v in series.items():
        bucket = by_year.setdefault(period.year, [])
        if v is not None:
            bucket.append(v)
    years = range(series.start.year, series.end.year + 1)
    values = []
    for y in years:
        obs = by_year.get(y, [])
        values.append(math.fsum(obs) / len(obs) if len(obs) >= min_months and obs else None)
    return StationSeries(series.station_id, YearMonth(series.start.year, 1), tuple(values),
                         series.provenance, Granularity.YEARLY)
