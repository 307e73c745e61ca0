"""Synthetic two-tier monitoring network with known ground truth.

Reference stations report a true concentration and carry a passive-sampler
triplet; area stations only have passive samplers. Sampler readings are
generated from the true concentration by inverting the monthly calibration
model ``ref / x = a(t) + b(t) x``, so the calibration model is the
generating truth.

Randomness: numpy ``Philox`` (Philox4x64-10) bit generators, one per
station, seeded by ``SeedSequence(seed, spawn_key=(stream, index))``. A
station's draws therefore depend only on the seed and its own index.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .calibration import MonthObservations, StationEntry
from .errors import AllMissing, IndexOutOfRange, InvalidSpec
from .series import Granularity, Provenance, StationSeries, YearMonth

RNG_ALGORITHM = "numpy.random.Philox (Philox4x64-10) seeded by SeedSequence(seed, spawn_key=(stream, index))"
RNG_VERSION = 1

_STREAM_CALIBRATION = 0
_STREAM_REFERENCE = 1
_STREAM_AREA = 2


@dataclass(frozen=True)
class SpikeSpec:
    station: str
    month: int
    magnitude: float


@dataclass(frozen=True)
class SynthSpec:
    n_reference_stations: int = 6
    n_area_stations: int = 294
    n_months: int = 156
    start: YearMonth = YearMonth(2005, 1)
    baseline: float = 10.0
    # Station baselines are baseline * (1 + spread * U(-1, 1)).
    baseline_spread: float = 0.5
    trend_sd: float = 0.004
    # Explicit per-station trends (µg/m³ per month) override the drawn ones.
    area_trends: Optional[tuple[float, ...]] = None
    reference_trends: Optional[tuple[float, ...]] = None
    seasonal_amplitude: float = 1.5
    observation_sd: float = 1.0
    sampler_sd: float = 2.0
    calib_a: float | tuple[float, ...] | None = None
    calib_b: float | tuple[float, ...] | None = None
    calib_a_mean: float = 1.05
    calib_a_sd: float = 0.04
    calib_b_mean: float = -0.002
    calib_b_sd: float = 0.001
    missing_rate: float = 0.0
    spikes: tuple[SpikeSpec, ...] = ()
    seed: int = 0

    def validate(self) -> None:
        for name in ("n_reference_stations", "n_area_stations", "n_months"):
            if getattr(self, name) < 1:
                raise InvalidSpec(f"{name} must be >= 1")
        for name in ("trend_sd", "seasonal_amplitude", "observation_sd", "sampler_sd",
                     "calib_a_sd", "calib_b_sd", "baseline_spread"):
            if not getattr(self, name) >= 0:
                raise InvalidSpec(f"{name} must be >= 0")
        if not 0 <= self.missing_rate < 1:
            raise InvalidSpec("missing_rate must lie in [0, 1)")
        if self.area_trends is not None and len(self.area_trends) != self.n_area_stations:
            raise InvalidSpec("area_trends needs one value per area station")
        if self.reference_trends is not None and len(self.reference_trends) != self.n_reference_stations:
            raise InvalidSpec("reference_trends needs one value per reference station")
        for coef in (self.calib_a, self.calib_b):
            if isinstance(coef, (tuple, list)) and len(coef) != self.n_months:
                raise InvalidSpec("per-month calibration coefficients need one value per month")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        for sp in self.spikes:
            if not 1 <= sp.month <= self.n_months:
                raise InvalidSpec(f"spike month {sp.month} outside 1..{self.n_months}")


@dataclass(frozen=True)
class SynthGroundTruth:
    seed: int
    start: YearMonth
    n_months: int
    a: tuple[float, ...]
    b: tuple[float, ...]
    trends: dict[str, float]
    baselines: dict[str, float]
    gap_mask: dict[str, tuple[bool, ...]]
    spikes: tuple[SpikeSpec, ...]
    rng_algorithm: str = RNG_ALGORITHM
    rng_version: int = RNG_VERSION

    def to_json_dict(self) -> dict:
        return {
            "rng": {"algorithm": self.rng_algorithm, "version": self.rng_version, "numpy": np.__version__},
            "seed": self.seed,
            "start": str(self.start),
            "n_months": self.n_months,
            "calibration": {"a": list(self.a), "b": list(self.b)},
            "trends": dict(sorted(self.trends.items())),
            "baselines": dict(sorted(self.baselines.items())),
            "gaps": {sid: [i + 1 for i, g in enumerate(mask) if g] for sid, mask in sorted(self.gap_mask.items())},
            "spikes": [asdict(s) for s in self.spikes],
        }


@dataclass(frozen=True)
class SynthNetwork:
    reference: list[StationSeries]
    months: list[MonthObservations]
    raw: list[StationSeries]
    truth: SynthGroundTruth
    # Noise-included true concentrations at the area stations, before sampler bias.
    true_values: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


def _rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, index))))


def _coefficient(value, mean: float, sd: float, draws: np.ndarray, n: int) -> np.ndarray:
    if value is None:
        return mean + sd * draws
    if isinstance(value, (tuple, list, np.ndarray)):
        return np.asarray(value, dtype=np.float64)
    return np.full(n, float(value))


def sampler_mean_for(reference: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sampler mean ``x`` solving ``reference / x = a + b x`` (root continuous in ``b``)."""
    disc = a * a + 4.0 * b * reference
    if np.any(disc < 0):
        raise InvalidSpec("calibration coefficients admit no sampler value for some concentration")
    return 2.0 * reference / (a + np.sqrt(disc))


def _station_draws(rng: np.random.Generator, n: int, n_missing_cols: int):
    base_u = rng.uniform(-1.0, 1.0)
    trend_z = rng.standard_normal()
    obs = rng.standard_normal(n)
    samp = rng.standard_normal((n, 3))
    miss = rng.random((n, n_missing_cols))
    return base_u, trend_z, obs, samp, miss


def generate_network(spec: SynthSpec) -> SynthNetwork:
    spec.validate()
    n = spec.n_months
    t = np.arange(1, n + 1, dtype=np.float64)
    season = spec.seasonal_amplitude * np.sin(2.0 * math.pi * t / 12.0)

    cal_rng = _rng(spec.seed, _STREAM_CALIBRATION, 0)
    a_draw, b_draw = cal_rng.standard_normal(n), cal_rng.standard_normal(n)
    a = _coefficient(spec.calib_a, spec.calib_a_mean, spec.calib_a_sd, a_draw, n)
    b = _coefficient(spec.calib_b, spec.calib_b_mean, spec.calib_b_sd, b_draw, n)

    trends: dict[str, float] = {}
    baselines: dict[str, float] = {}
    gap_mask: dict[str, tuple[bool, ...]] = {}

    def true_series(base_u, trend_z, obs, explicit):
        baseline = spec.baseline * (1.0 + spec.baseline_spread * base_u)
        trend = float(explicit) if explicit is not None else spec.trend_sd * trend_z
        # Concentrations are floored at zero; readings and references must be non-negative.
        value = np.maximum(baseline + trend * t + season + spec.observation_sd * obs, 0.0)
        return baseline, trend, value

    def readings(value, samp):
        x = sampler_mean_for(value, a, b)
        return np.maximum(x[:, None] + spec.sampler_sd * samp, 0.0)

    ref_ids = [f"REF{i + 1:02d}" for i in range(spec.n_reference_stations)]
    ref_values, ref_readings, ref_missing = [], [], []
    for i, sid in enumerate(ref_ids):
        base_u, trend_z, obs, samp, miss = _station_draws(_rng(spec.seed, _STREAM_REFERENCE, i), n, 4)
        explicit = spec.reference_trends[i] if spec.reference_trends is not None else None
        baseline, trend, value = true_series(base_u, trend_z, obs, explicit)
        baselines[sid], trends[sid] = baseline, trend
        ref_values.append(value)
        ref_readings.append(readings(value, samp))
        ref_missing.append(miss < spec.missing_rate)
        gap_mask[sid] = tuple(bool(m) for m in ref_missing[-1][:, 0])

    months = []
    for k in range(n):
        entries = []
        for i, sid in enumerate(ref_ids):
            miss = ref_missing[i][k]
            trip = tuple(None if miss[j + 1] else float(ref_readings[i][k, j]) for j in range(3))
            ref = None if miss[0] else float(ref_values[i][k])
            entries.append(StationEntry(sid, trip, ref))
        months.append(MonthObservations(spec.start.shift(k), tuple(entries)))

    reference = [
        StationSeries(sid, spec.start,
                      tuple(None if m else float(v) for v, m in zip(ref_values[i], ref_missing[i][:, 0])),
                      Provenance.REFERENCE, Granularity.MONTHLY)
        for i, sid in enumerate(ref_ids)
    ]

    raw, true_values = [], {}
    for i in range(spec.n_area_stations):
        sid = f"MAN{i + 1:03d}"
        base_u, trend_z, obs, samp, miss = _station_draws(_rng(spec.seed, _STREAM_AREA, i), n, 1)
        explicit = spec.area_trends[i] if spec.area_trends is not None else None
        baseline, trend, value = true_series(base_u, trend_z, obs, explicit)
        baselines[sid], trends[sid] = baseline, trend
        true_values[sid] = value
        xbar = readings(value, samp).sum(axis=1) / 3.0
        gaps = miss[:, 0] < spec.missing_rate
        gap_mask[sid] = tuple(bool(g) for g in gaps)
        raw.append(StationSeries(sid, spec.start, tuple(None if g else float(x) for x, g in zip(xbar, gaps)),
                                 Provenance.RAW, Granularity.MONTHLY))

    if spec.spikes:
        by_id = {s.station_id: k for k, s in enumerate(raw)}
        for sp in spec.spikes:
            if sp.station not in by_id:
                raise InvalidSpec(f"spike station {sp.station!r} is not an area station")
            k = by_id[sp.station]
            raw[k] = inject_spike(raw[k], sp.month, sp.magnitude)

    truth = SynthGroundTruth(
        seed=spec.seed, start=spec.start, n_months=n,
        a=tuple(float(v) for v in a), b=tuple(float(v) for v in b),
        trends=trends, baselines=baselines, gap_mask=gap_mask, spikes=tuple(spec.spikes),
    )
    return SynthNetwork(reference, months, raw, truth, true_values)


def inject_spike(series: StationSeries, month: int, magnitude: float) -> StationSeries:
    """Replace the value at 1-based position ``month`` with ``magnitude``."""
    if not 1 <= month <= len(series):
        raise IndexOutOfRange(f"month {month} outside 1..{len(series)} for station {series.station_id}")
    values = list(series.values)
    values[month - 1] = magnitude
    return series.with_values(values)


def impute_gaps_stub(series: StationSeries) -> StationSeries:
    """Fill gaps with the calendar-month mean across years (overall mean as fallback).

    A stand-in so three-dataset comparisons can run end to end; it is not a
    model of any operational imputation scheme.
    """
    if series.granularity is not Granularity.MONTHLY:
        raise ValueError("gap filling works on monthly series")
    present = [v for v in series.values if v is not None]
    if not present:
        raise AllMissing(f"station {series.station_id} has no observations")
    overall = math.fsum(present) / len(present)
    by_month: dict[int, list[float]] = {}
    for period, v in series.items():
        if v is not None:
            by_month.setdefault(period.month, []).append(v)
    means = {m: math.fsum(vs) / len(vs) for m, vs in by_month.items()}
    filled = [v if v is not None else means.get(period.month, overall) for period, v in series.items()]
    return series.with_values(filled, Provenance.CALIBRATED_IMPUTED)

