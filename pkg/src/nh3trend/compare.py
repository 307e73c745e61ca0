"""Trend accounting across datasets: census, agreement tables, coefficient deltas.

Functions accept any records exposing ``station_id``, ``theta1``, ``p_naive``
and ``p_adjusted`` (``TrendFit`` or rows read back from a trend CSV).
Significance is ``p < alpha``; ``P`` labels a non-significant trend and
``p`` a significant one. Exactly-zero slopes have no sign and are counted
separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .errors import EmptyInput, NoCommonStations
from .trend import DEFAULT_ALPHA

SIGN_CELLS = (("-", "-"), ("-", "+"), ("+", "-"), ("+", "+"))
SIG_CELLS = (("P", "P"), ("P", "p"), ("p", "P"), ("p", "p"))


class TrendRecord(Protocol):
    station_id: str
    theta1: float
    p_naive: float
    p_adjusted: float


def _sign(rec: TrendRecord) -> str:
    return "+" if rec.theta1 > 0 else "-"


def _sig(rec: TrendRecord, alpha: float, adjusted: bool) -> str:
    p = rec.p_adjusted if adjusted else rec.p_naive
    return "p" if p < alpha else "P"


def _index(fits: Iterable[TrendRecord]) -> dict[str, TrendRecord]:
    out: dict[str, TrendRecord] = {}
    for f in fits:
        if f.station_id in out:
            raise ValueError(f"duplicate station {f.station_id!r} in trend set")
        out[f.station_id] = f
    return out


@dataclass(frozen=True)
class TrendCensus:
    positive: int
    negative: int
    positive_significant: int
    negative_significant: int
    zero: int
    dataset_label: str
    alpha: float
    adjusted: bool

    @property
    def n_stations(self) -> int:
        return self.positive + self.negative + self.zero


def trend_census(
    fits: Sequence[TrendRecord],
    alpha: float = DEFAULT_ALPHA,
    adjusted: bool = False,
    dataset_label: str = "raw",
) -> TrendCensus:
    if not fits:
        raise EmptyInput("trend census needs at least one fit")
    pos = neg = pos_sig = neg_sig = zero = 0
    for f in fits:
        if f.theta1 == 0:
            zero += 1
            continue
        significant = _sig(f, alpha, adjusted) == "p"
        if f.theta1 > 0:
            pos += 1
            pos_sig += significant
        else:
            neg += 1
            neg_sig += significant
    return TrendCensus(pos, neg, pos_sig, neg_sig, zero, str(dataset_label), alpha, adjusted)


@dataclass(frozen=True)
class Pairing:
    """Stations matched between two trend sets, plus what was left out."""

    common: tuple[tuple[TrendRecord, TrendRecord], ...]
    only_a: tuple[str, ...]
    only_b: tuple[str, ...]
    zero_slope: tuple[str, ...]


def pair_fits(fits_a: Iterable[TrendRecord], fits_b: Iterable[TrendRecord]) -> Pairing:
    a, b = _index(fits_a), _index(fits_b)
    shared = sorted(set(a) & set(b))
    if not shared:
        raise NoCommonStations("the two trend sets share no station ids")
    common, zero = [], []
    for sid in shared:
        if a[sid].theta1 == 0 or b[sid].theta1 == 0:
            zero.append(sid)
        else:
            common.append((a[sid], b[sid]))
    return Pairing(tuple(common), tuple(sorted(set(a) - set(b))), tuple(sorted(set(b) - set(a))), tuple(zero))


@dataclass(frozen=True)
class AgreementTable:
    labels: tuple[str, str]
    sign_counts: dict[tuple[str, str], int]
    significance_counts: dict[tuple[str, str], int]
    n_common: int
    only_a: tuple[str, ...] = ()
    only_b: tuple[str, ...] = ()
    zero_slope: tuple[str, ...] = ()

    @property
    def sign_disagreements(self) -> int:
        return self.sign_counts[("-", "+")] + self.sign_counts[("+", "-")]

    @property
    def significance_disagreements(self) -> int:
        return self.significance_counts[("P", "p")] + self.significance_counts[("p", "P")]


def pairwise_agreement(
    fits_a: Iterable[TrendRecord],
    fits_b: Iterable[TrendRecord],
    alpha: float = DEFAULT_ALPHA,
    adjusted: bool = False,
    labels: tuple[str, str] = ("a", "b"),
) -> AgreementTable:
    """2x2 sign and significance tables over the stations present in both sets."""
    pairing = pair_fits(fits_a, fits_b)
    signs = dict.fromkeys(SIGN_CELLS, 0)
    sigs = dict.fromkeys(SIG_CELLS, 0)
    for fa, fb in pairing.common:
        signs[(_sign(fa), _sign(fb))] += 1
        sigs[(_sig(fa, alpha, adjusted), _sig(fb, alpha, adjusted))] += 1
    return AgreementTable(tuple(labels), signs, sigs, len(pairing.common),
                          pairing.only_a, pairing.only_b, pairing.zero_slope)


@dataclass(frozen=True)
class ConditionalBreakdown:
    """Sign tables split by the joint significance cell of each station."""

    labels: tuple[str, str]
    tables: dict[tuple[str, str], dict[tuple[str, str], int]] = field(default_factory=dict)
    n_common: int = 0

    @property
    def total(self) -> int:
        return sum(sum(t.values()) for t in self.tables.values())

    def significance_totals(self) -> dict[tuple[str, str], int]:
        return {cell: sum(t.values()) for cell, t in self.tables.items()}


def conditional_breakdown(
    fits_a: Iterable[TrendRecord],
    fits_b: Iterable[TrendRecord],
    alpha: float = DEFAULT_ALPHA,
    adjusted: bool = False,
    labels: tuple[str, str] = ("a", "b"),
) -> ConditionalBreakdown:
    pairing = pair_fits(fits_a, fits_b)
    tables = {cell: dict.fromkeys(SIGN_CELLS, 0) for cell in SIG_CELLS}
    for fa, fb in pairing.common:
        sig = (_sig(fa, alpha, adjusted), _sig(fb, alpha, adjusted))
        tables[sig][(_sign(fa), _sign(fb))] += 1
    return ConditionalBreakdown(tuple(labels), tables, len(pairing.common))


@dataclass(frozen=True)
class TrendDelta:
    station_id: str
    theta1_a: float
    delta: float


def trend_delta(fits_a: Iterable[TrendRecord], fits_b: Iterable[TrendRecord]) -> list[TrendDelta]:
    """Per-station ``theta1_b - theta1_a``, ordered by ``theta1_a`` ascending."""
    a, b = _index(fits_a), _index(fits_b)
    shared = set(a) & set(b)
    if not shared:
        raise NoCommonStations("the two trend sets share no station ids")
    rows = [TrendDelta(sid, a[sid].theta1, b[sid].theta1 - a[sid].theta1) for sid in shared]
    rows.sort(key=lambda r: (r.theta1_a, r.station_id))
    return rows


def delta_table(
    raw: Iterable[TrendRecord],
    calibrated: Iterable[TrendRecord],
    imputed: Iterable[TrendRecord] | None = None,
) -> list[dict]:
    """Plot-ready rows: rank by raw trend, calibrated-minus-raw, imputed-minus-raw."""
    raw = list(raw)
    cal = {d.station_id: d for d in trend_delta(raw, calibrated)}
    imp = {d.station_id: d for d in trend_delta(raw, imputed)} if imputed is not None else {}
    ids = [d.station_id for d in sorted(cal.values(), key=lambda r: (r.theta1_a, r.station_id))]
    rows = []
    for rank, sid in enumerate(ids, start=1):
        rows.append({
            "rank": rank,
            "station_id": sid,
            "delta_calibrated": cal[sid].delta,
            "delta_imputed": imp[sid].delta if sid in imp else None,
        })
    return rows


@dataclass(frozen=True)
class SignificanceDrop:
    naive_count: int
    adjusted_count: int
    drop_fraction: float


def significance_drop_report(fits: Sequence[TrendRecord], alpha: float = DEFAULT_ALPHA) -> SignificanceDrop:
    """Significant-trend counts under naive and variance-inflated p-values."""
    if not fits:
        raise EmptyInput("significance drop report needs at least one fit")
    naive = sum(1 for f in fits if f.theta1 != 0 and f.p_naive < alpha)
    adjusted = sum(1 for f in fits if f.theta1 != 0 and f.p_adjusted < alpha)
    drop = (naive - adjusted) / naive if naive else 0.0
    return SignificanceDrop(naive, adjusted, drop)
