"""Monthly inverse calibration of passive-sampler means against reference stations.

Each month the ratio ``reference / x`` is regressed on the sampler mean ``x``
across the reference stations, giving coefficients ``a_hat`` and ``b_hat``.
Any sampler mean is then corrected by ``x_c = (a_hat + b_hat * x) * x``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    InsufficientPairs,
    InsufficientStations,
    MissingCalibrationMonth,
    NonphysicalValue,
    ZeroSamplerMean,
)
from .series import Provenance, StationSeries, YearMonth
from .stats import Interval, OlsFit, ols_fit, prediction_interval, t_quantile

DEFAULT_MIN_STATIONS = 3
DEFAULT_LEVEL = 0.90
# Pooled calibration-error variance (µg/m³)² used when no reference data is available.
DEFAULT_SIGMA_NU_SQUARED = 1.635


@dataclass(frozen=True)
class StationEntry:
    station_id: str
    samplers: tuple[Optional[float], Optional[float], Optional[float]]
    reference: Optional[float]

    def __post_init__(self):
        s = tuple(self.samplers)
        if len(s) != 3:
            raise ValueError("a sampler triplet has exactly three readings")
        for v in s:
            if v is not None and not v >= 0:
                raise ValueError(f"sampler readings must be >= 0, got {v!r}")
        if self.reference is not None and not self.reference >= 0:
            raise ValueError(f"reference values must be >= 0, got {self.reference!r}")
        object.__setattr__(self, "samplers", s)

    @property
    def triplet_mean(self) -> Optional[float]:
        """Mean of the available readings, or None when all three are missing."""
        present = [v for v in self.samplers if v is not None]
        if not present:
            return None
        return math.fsum(present) / len(present)


@dataclass(frozen=True)
class MonthObservations:
    month: YearMonth
    entries: tuple[StationEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValueError(f"month {self.month} has no station entries")


@dataclass(frozen=True)
class CalibratedStation:
    station_id: str
    x: float
    reference: float
    x_c: float
    interval: Optional[Interval]

    @property
    def nonphysical(self) -> bool:
        return self.x_c < 0


@dataclass(frozen=True)
class CalibrationFit:
    month: YearMonth
    a_hat: float
    b_hat: float
    ols: OlsFit
    level: float
    stations: tuple[CalibratedStation, ...]

    @property
    def n_stations(self) -> int:
        return self.ols.n

    @property
    def residual_variance(self) -> float:
        return self.ols.residual_variance


@dataclass(frozen=True)
class ErrorModel:
    """Pooled calibration-error summary across all months and stations.

    ``c_hat`` is the origin-constrained slope of ``|reference - x_c|`` on
    ``x_c``; ``pooled_nu_variance`` is the sample variance of
    ``reference - x_c``.
    """

    c_hat: float
    c_residual_variance: float
    pooled_nu_variance: float
    n_pairs: int
    sum_xc_squared: float

    def error_band(self, x_c: float, level: float = DEFAULT_LEVEL) -> float:
        """Half-width of the ``level`` band ``x_c ± h`` from the proportional-error model.

        ``h`` is the one-sided upper prediction bound of ``|reference - x_c|``
        at ``x_c``.
        """
        q = t_quantile(level, self.n_pairs - 1)
        var = self.c_residual_variance * (1.0 + x_c * x_c / self.sum_xc_squared)
        return self.c_hat * x_c + q * math.sqrt(var)


def apply_calibration(a_hat: float, b_hat: float, x: float) -> float:
    return (a_hat + b_hat * x) * x


def fit_month(
    obs: MonthObservations,
    min_stations: int = DEFAULT_MIN_STATIONS,
    level: float = DEFAULT_LEVEL,
) -> CalibrationFit:
    """Fit one month's calibration and calibrate its own reference stations.

    Stations need both a sampler mean and a reference value. A zero sampler
    mean is dropped with a ``ZeroSamplerMean`` warning before the station
    count is checked. Per-station intervals are only computed when at least
    three stations remain.
    """
    if min_stations < 2:
        raise ValueError("min_stations must be at least 2")
    usable = []
    for e in obs.entries:
        x = e.triplet_mean
        if x is None or e.reference is None:
            continue
        if x == 0:
            warnings.warn(f"{obs.month} station {e.station_id}: sampler mean is 0, station excluded",
                          ZeroSamplerMean, stacklevel=2)
            continue
        usable.append((e.station_id, x, e.reference))
    if len(usable) < min_stations:
        raise InsufficientStations(f"{obs.month}: {len(usable)} usable stations, need {min_stations}")

    xs = [u[1] for u in usable]
    ys = [ref / x for _, x, ref in usable]
    try:
        ols = ols_fit(xs, ys)
    except DegenerateInput as exc:
        raise InsufficientStations(f"{obs.month}: {exc}") from exc

    a_hat, b_hat = ols.intercept, ols.slope
    stations = []
    for sid, x, ref in usable:
        x_c = apply_calibration(a_hat, b_hat, x)
        interval = _ratio_interval(ols, x, level) if ols.n >= 3 else None
        stations.append(CalibratedStation(sid, x, ref, x_c, interval))
    return CalibrationFit(obs.month, a_hat, b_hat, ols, level, tuple(stations))


def _ratio_interval(ols: OlsFit, x: float, level: float) -> Interval:
    # LML = y * x with x known, so the ratio interval scales by x.
    return prediction_interval(ols, x, level).scaled(x)


def calibrated_interval(fit: CalibrationFit, x: float, level: Optional[float] = None) -> Interval:
    """Prediction interval for the reference concentration at sampler mean ``x``."""
    if not x > 0:
        raise ValueError(f"sampler mean must be positive, got {x!r}")
    return _ratio_interval(fit.ols, x, fit.level if level is None else level)


def fit_months(
    months: Iterable[MonthObservations],
    min_stations: int = DEFAULT_MIN_STATIONS,
    level: float = DEFAULT_LEVEL,
) -> dict[YearMonth, CalibrationFit]:
    """Fit every month that has enough stations; other months are skipped."""
    fits = {}
    for obs in months:
        try:
            fits[obs.month] = fit_month(obs, min_stations, level)
        except InsufficientStations:
            continue
    return fits


def error_pairs(fits: Iterable[CalibrationFit]) -> list[tuple[float, float]]:
    """``(x_c, reference)`` for every calibrated reference station in ``fits``."""
    return [(s.x_c, s.reference) for f in fits for s in f.stations]


def fit_error_model(pairs: Sequence[tuple[float, float]]) -> ErrorModel:
    """Fit the origin-constrained error model ``|ref - x_c| = c x_c + eps``."""
    if len(pairs) < 2:
        raise InsufficientPairs(f"need at least 2 (x_c, reference) pairs, got {len(pairs)}")
    arr = np.asarray(pairs, dtype=np.float64)
    xc, ref = arr[:, 0], arr[:, 1]
    sxx = float(xc @ xc)
    if sxx == 0:
        raise InsufficientPairs("all calibrated values are zero")
    diff = ref - xc
    absdiff = np.abs(diff)
    c_hat = float(absdiff @ xc) / sxx
    n = len(pairs)
    resid = absdiff - c_hat * xc
    c_resid_var = float(resid @ resid) / (n - 1)
    if float(np.max(np.abs(resid))) <= 1e-12 * float(np.max(absdiff, initial=0.0)):
        c_resid_var = 0.0
    nu_var = float(np.var(diff, ddof=1))
    return ErrorModel(c_hat=c_hat, c_residual_variance=c_resid_var, pooled_nu_variance=nu_var,
                      n_pairs=n, sum_xc_squared=sxx)


def calibrate_series(series: StationSeries, fits: Mapping[YearMonth, CalibrationFit]) -> tuple[StationSeries, list[YearMonth]]:
    """Calibrate one raw series; returns the series and the months left missing for lack of a fit."""
    out = []
    uncalibrated = []
    for month, x in series.items():
        if x is None:
            out.append(None)
            continue
        fit = fits.get(month)
        if fit is None:
            uncalibrated.append(month)
            out.append(None)
            continue
        out.append(apply_calibration(fit.a_hat, fit.b_hat, x))
    return series.with_values(out, Provenance.CALIBRATED), uncalibrated


def calibrate_dataset(
    raw: Iterable[StationSeries],
    fits: Mapping[YearMonth, CalibrationFit],
) -> list[StationSeries]:
    """Apply each month's coefficients to every passive-sampler series.

    Months with data but no fit become gaps and raise one
    ``MissingCalibrationMonth`` warning per dataset; negative results are kept
    and reported with ``NonphysicalValue``.
    """
    result = []
    missing: set[YearMonth] = set()
    negative = 0
    for s in raw:
        cal, gaps = calibrate_series(s, fits)
        missing.update(gaps)
        negative += sum(1 for v in cal.values if v is not None and v < 0)
        result.append(cal)
    if missing:
        listed = ", ".join(str(m) for m in sorted(missing))
        warnings.warn(f"no calibration fit for {len(missing)} month(s): {listed}; values left missing",
                      MissingCalibrationMonth, stacklevel=2)
    if negative:
        warnings.warn(f"{negative} calibrated value(s) are negative", NonphysicalValue, stacklevel=2)
    return result
