"""CSV ingestion and export.

File contracts (UTF-8, header row required, ``.`` decimal point, empty cell
for a missing value):

* reference series: ``station_id,year,month,value``
* sampler triplets: ``station_id,year,month,s1,s2,s3``
* station series:   ``station_id,year,month,value,provenance``

Data files write floats with ``repr`` so a write/load round trip is exact.
"""

from __future__ import annotations

import csv
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .calibration import CalibrationFit, MonthObservations, StationEntry
from .errors import AxisMismatch, DuplicateKey, ParseError
from .series import Granularity, Provenance, StationSeries, YearMonth, months_between
from .trend import SweepEntry, TrendFit, classify

REFERENCE_COLUMNS = ("station_id", "year", "month", "value")
TRIPLET_COLUMNS = ("station_id", "year", "month", "s1", "s2", "s3")
SERIES_COLUMNS = ("station_id", "year", "month", "value", "provenance")
FIT_COLUMNS = ("month", "a_hat", "b_hat", "n_stations", "residual_variance")
TREND_COLUMNS = ("station_id", "provenance", "n_used", "theta0", "theta1", "se_naive", "se_adjusted",
                 "p_naive", "p_adjusted", "class")
SWEEP_COLUMNS = ("station_id", "start_index", "start", "n_used", "theta1", "p_naive", "p_adjusted", "class")


def fmt_float(v: Optional[float]) -> str:
    if v is None:
        return ""
    return repr(float(v))


# -- reading ---------------------------------------------------------------

def _rows(path, columns: Sequence[str]):
    """Yield ``(line_number, row_dict)`` after checking the header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, header row required", path, 1) from None
        header = [h.strip() for h in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise ParseError(f"missing column(s) {', '.join(missing)}", path, 1)
        pos = {c: header.index(c) for c in columns}
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, line)
            yield line, {c: row[pos[c]].strip() for c in columns}


def _parse_float(text: str, path, line, column, allow_empty=True) -> Optional[float]:
    if text == "":
        if allow_empty:
            return None
        raise ParseError("value required", path, line, column)
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", path, line, column) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", path, line, column)
    return v


def _parse_month(rec, path, line) -> YearMonth:
    try:
        ym = YearMonth(int(rec["year"]), int(rec["month"]))
    except ValueError:
        raise ParseError(f"bad year/month {rec['year']!r}/{rec['month']!r}", path, line, "month") from None
    if not 1 <= ym.month <= 12:
        raise ParseError(f"month {ym.month} outside 1..12", path, line, "month")
    return ym


def _station(rec, path, line) -> str:
    sid = rec["station_id"]
    if not sid:
        raise ParseError("empty station_id", path, line, "station_id")
    return sid


def read_reference(path) -> dict[tuple[str, YearMonth], Optional[float]]:
    out = {}
    for line, rec in _rows(path, REFERENCE_COLUMNS):
        key = (_station(rec, path, line), _parse_month(rec, path, line))
        if key in out:
            raise DuplicateKey(f"duplicate row for station {key[0]} month {key[1]}", path, line)
        v = _parse_float(rec["value"], path, line, "value")
        if v is not None and v < 0:
            raise ParseError("negative concentration", path, line, "value")
        out[key] = v
    return out


def read_triplets(path) -> dict[tuple[str, YearMonth], tuple[Optional[float], ...]]:
    out = {}
    for line, rec in _rows(path, TRIPLET_COLUMNS):
        key = (_station(rec, path, line), _parse_month(rec, path, line))
        if key in out:
            raise DuplicateKey(f"duplicate row for station {key[0]} month {key[1]}", path, line)
        trip = tuple(_parse_float(rec[c], path, line, c) for c in ("s1", "s2", "s3"))
        for c, v in zip(("s1", "s2", "s3"), trip):
            if v is not None and v < 0:
                raise ParseError("negative sampler reading", path, line, c)
        out[key] = trip
    return out


def read_series_rows(path) -> tuple[dict[tuple[str, YearMonth], Optional[float]], dict[str, Provenance]]:
    values, prov = {}, {}
    for line, rec in _rows(path, SERIES_COLUMNS):
        sid = _station(rec, path, line)
        key = (sid, _parse_month(rec, path, line))
        if key in values:
            raise DuplicateKey(f"duplicate row for station {sid} month {key[1]}", path, line)
        try:
            p = Provenance(rec["provenance"])
        except ValueError:
            raise ParseError(f"unknown provenance {rec['provenance']!r}", path, line, "provenance") from None
        if prov.setdefault(sid, p) is not p:
            raise ParseError(f"station {sid} mixes provenance labels", path, line, "provenance")
        values[key] = _parse_float(rec["value"], path, line, "value")
    return values, prov


def _assemble(values: dict, provenance: dict[str, Provenance] | Provenance, start: YearMonth, n: int) -> list[StationSeries]:
    by_station: dict[str, list[Optional[float]]] = {}
    for (sid, ym), v in values.items():
        by_station.setdefault(sid, [None] * n)[ym.ordinal() - start.ordinal()] = v
    out = []
    for sid in sorted(by_station):
        p = provenance[sid] if isinstance(provenance, dict) else provenance
        out.append(StationSeries(sid, start, tuple(by_station[sid]), p, Granularity.MONTHLY))
    return out


def load_series(path) -> list[StationSeries]:
    """Read a station-series file onto the axis spanned by its own rows."""
    values, prov = read_series_rows(path)
    if not values:
        raise ParseError("no data rows", path)
    months = [ym for _, ym in values]
    start, end = min(months), max(months)
    return _assemble(values, prov, start, months_between(start, end))


@dataclass
class DatasetBundle:
    start: YearMonth
    n_months: int
    reference: list[StationSeries] = field(default_factory=list)
    raw: list[StationSeries] = field(default_factory=list)
    calibrated: Optional[list[StationSeries]] = None
    calibrated_imputed: Optional[list[StationSeries]] = None
    months: list[MonthObservations] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def end(self) -> YearMonth:
        return self.start.shift(self.n_months - 1)


_SLOT_PROVENANCE = {
    "raw": Provenance.RAW,
    "calibrated": Provenance.CALIBRATED,
    "calibrated_imputed": Provenance.CALIBRATED_IMPUTED,
}


def load_dataset(
    reference=None,
    triplets=None,
    raw=None,
    calibrated=None,
    calibrated_imputed=None,
    axis: tuple[YearMonth, YearMonth] | None = None,
) -> DatasetBundle:
    """Load any subset of the network files onto one monthly axis.

    Without ``axis`` the axis spans the earliest to latest month seen in any
    file. With ``axis`` given, data outside it raises ``AxisMismatch``.
    """
    sources = {k: v for k, v in dict(reference=reference, triplets=triplets, raw=raw, calibrated=calibrated,
                                     calibrated_imputed=calibrated_imputed).items() if v is not None}
    if not sources:
        raise ValueError("load_dataset needs at least one file")

    ref = read_reference(reference) if reference is not None else {}
    trip = read_triplets(triplets) if triplets is not None else {}
    series_rows = {}
    for slot in ("raw", "calibrated", "calibrated_imputed"):
        if sources.get(slot) is not None:
            vals, prov = read_series_rows(sources[slot])
            wrong = sorted(sid for sid, p in prov.items() if p is not _SLOT_PROVENANCE[slot])
            if wrong:
                raise ParseError(f"{slot} file has stations labelled otherwise: {', '.join(wrong[:5])}",
                                 sources[slot])
            series_rows[slot] = vals

    months = {ym for _, ym in ref} | {ym for _, ym in trip}
    for vals in series_rows.values():
        months |= {ym for _, ym in vals}
    if not months:
        raise ParseError("no data rows in any file")
    lo, hi = min(months), max(months)
    if axis is not None:
        start, end = axis
        if lo < start or hi > end:
            raise AxisMismatch(f"data spans {lo}..{hi}, outside the declared axis {start}..{end}")
    else:
        start, end = lo, hi
    n = months_between(start, end)

    bundle = DatasetBundle(start, n)
    if ref:
        bundle.reference = _assemble(ref, Provenance.REFERENCE, start, n)
    for slot, vals in series_rows.items():
        setattr(bundle, slot, _assemble(vals, _SLOT_PROVENANCE[slot], start, n))
    if trip or ref:
        bundle.months = _month_observations(ref, trip)
    bundle.metadata = {
        "sources": {k: str(v) for k, v in sorted(sources.items())},
        "rows": {"reference": len(ref), "triplets": len(trip), **{k: len(v) for k, v in series_rows.items()}},
        "start": str(start),
        "end": str(end),
        "n_months": n,
    }
    return bundle


def _month_observations(ref, trip) -> list[MonthObservations]:
    grouped: dict[YearMonth, dict[str, StationEntry]] = {}
    for key in sorted(set(ref) | set(trip)):
        sid, ym = key
        samplers = trip.get(key, (None, None, None))
        grouped.setdefault(ym, {})[sid] = StationEntry(sid, samplers, ref.get(key))
    return [MonthObservations(ym, tuple(entries.values())) for ym, entries in sorted(grouped.items())]


# -- writing ---------------------------------------------------------------

@contextmanager
def _csv_out(target):
    """CSV writer on a path or an already-open text stream."""
    if hasattr(target, "write"):
        yield csv.writer(target, lineterminator="\n")
        return
    with Path(target).open("w", newline="", encoding="utf-8") as fh:
        yield csv.writer(fh, lineterminator="\n")


def write_series_csv(series: Iterable[StationSeries], path) -> None:
    with _csv_out(path) as w:
        w.writerow(SERIES_COLUMNS)
        for s in sorted(series, key=lambda s: s.station_id):
            for ym, v in s.items():
                w.writerow([s.station_id, ym.year, ym.month, fmt_float(v), s.provenance.value])


def write_reference_csv(series: Iterable[StationSeries], path) -> None:
    with _csv_out(path) as w:
        w.writerow(REFERENCE_COLUMNS)
        for s in sorted(series, key=lambda s: s.station_id):
            for ym, v in s.items():
                w.writerow([s.station_id, ym.year, ym.month, fmt_float(v)])


def write_triplets_csv(months: Iterable[MonthObservations], path) -> None:
    rows = []
    for obs in months:
        for e in obs.entries:
            rows.append((e.station_id, obs.month, e.samplers))
    rows.sort(key=lambda r: (r[0], r[1]))
    with _csv_out(path) as w:
        w.writerow(TRIPLET_COLUMNS)
        for sid, ym, trip in rows:
            w.writerow([sid, ym.year, ym.month, *(fmt_float(v) for v in trip)])


def write_fits_csv(fits: Iterable[CalibrationFit], path) -> None:
    with _csv_out(path) as w:
        w.writerow(FIT_COLUMNS)
        for f in sorted(fits, key=lambda f: f.month):
            w.writerow([str(f.month), fmt_float(f.a_hat), fmt_float(f.b_hat), f.n_stations,
                        fmt_float(f.residual_variance)])


def write_calibration_intervals_csv(fits: Iterable[CalibrationFit], path) -> None:
    """Per reference station and month: sampler mean, calibrated value, interval."""
    with _csv_out(path) as w:
        w.writerow(("month", "station_id", "x", "x_c", "reference", "level", "lower", "upper"))
        for f in sorted(fits, key=lambda f: f.month):
            for s in sorted(f.stations, key=lambda s: s.station_id):
                lo = s.interval.lower if s.interval else None
                hi = s.interval.upper if s.interval else None
                w.writerow([str(f.month), s.station_id, fmt_float(s.x), fmt_float(s.x_c), fmt_float(s.reference),
                            f.level, fmt_float(lo), fmt_float(hi)])


@dataclass(frozen=True)
class TrendRow:
    """A trend-CSV row; carries what the comparison functions need."""

    station_id: str
    provenance: str
    n_used: int
    theta0: float
    theta1: float
    se_naive: float
    se_adjusted: float
    p_naive: float
    p_adjusted: float
    trend_class: str


def write_trends_csv(fits: Iterable[TrendFit], path, alpha: float, adjusted: bool) -> None:
    with _csv_out(path) as w:
        w.writerow(TREND_COLUMNS)
        for f in sorted(fits, key=lambda f: f.station_id):
            w.writerow([f.station_id, Provenance(f.provenance).value, f.n_used, fmt_float(f.theta0),
                        fmt_float(f.theta1), fmt_float(f.se_naive), fmt_float(f.se_adjusted),
                        fmt_float(f.p_naive), fmt_float(f.p_adjusted), classify(f, alpha, adjusted).value])


def load_trends(path) -> list[TrendRow]:
    out, seen = [], set()
    for line, rec in _rows(path, TREND_COLUMNS):
        sid = _station(rec, path, line)
        if sid in seen:
            raise DuplicateKey(f"duplicate station {sid}", path, line)
        seen.add(sid)
        nums = {c: _parse_float(rec[c], path, line, c, allow_empty=False)
                for c in ("theta0", "theta1", "se_naive", "se_adjusted", "p_naive", "p_adjusted")}
        try:
            n_used = int(rec["n_used"])
        except ValueError:
            raise ParseError(f"bad n_used {rec['n_used']!r}", path, line, "n_used") from None
        out.append(TrendRow(sid, rec["provenance"], n_used, trend_class=rec["class"], **nums))
    return out


def write_sweep_csv(rows: Iterable[tuple[str, SweepEntry]], path) -> None:
    with _csv_out(path) as w:
        w.writerow(SWEEP_COLUMNS)
        for sid, e in rows:
            if e.fit is None:
                w.writerow([sid, e.start_index, str(e.start), "", "", "", "", "InsufficientData"])
            else:
                w.writerow([sid, e.start_index, str(e.start), e.fit.n_used, fmt_float(e.fit.theta1),
                            fmt_float(e.fit.p_naive), fmt_float(e.fit.p_adjusted), e.trend_class.value])
