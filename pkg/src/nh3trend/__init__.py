"""Calibration-aware trend analysis for two-tier air-quality monitoring networks."""

from .calibration import (
    CalibrationFit,
    ErrorModel,
    MonthObservations,
    StationEntry,
    apply_calibration,
    calibrate_dataset,
    calibrated_interval,
    error_pairs,
    fit_error_model,
    fit_month,
    fit_months,
)
from .compare import (
    conditional_breakdown,
    pairwise_agreement,
    significance_drop_report,
    trend_census,
    trend_delta,
)
from .config import RunConfig
from .series import Granularity, Provenance, StationSeries, YearMonth
from .stats import Interval, OlsFit, ols_fit, prediction_interval, two_sided_p
from .synth import SynthSpec, generate_network, impute_gaps_stub, inject_spike
from .trend import TrendClass, TrendFit, aggregate_yearly, classify, fit_trend, start_date_sweep

__version__ = "0.1.0"
