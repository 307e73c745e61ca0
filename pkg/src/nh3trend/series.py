"""Time-indexed station series shared by every stage of the pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, NamedTuple, Optional, Sequence


class YearMonth(NamedTuple):
    year: int
    month: int

    @classmethod
    def from_ordinal(cls, k: int) -> "YearMonth":
        y, m = divmod(k, 12)
        return cls(y, m + 1)

    def ordinal(self) -> int:
        return self.year * 12 + (self.month - 1)

    def shift(self, months: int) -> "YearMonth":
        return YearMonth.from_ordinal(self.ordinal() + months)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    @classmethod
    def parse(cls, text: str) -> "YearMonth":
        y, m = text.strip().split("-")
        ym = cls(int(y), int(m))
        if not 1 <= ym.month <= 12:
            raise ValueError(f"month out of range in {text!r}")
        return ym


def months_between(start: YearMonth, end: YearMonth) -> int:
    """Number of months from ``start`` to ``end`` inclusive."""
    return end.ordinal() - start.ordinal() + 1


class Provenance(str, Enum):
    RAW = "raw"
    CALIBRATED = "calibrated"
    CALIBRATED_IMPUTED = "calibrated_imputed"
    REFERENCE = "reference"


class Granularity(str, Enum):
    MONTHLY = "monthly"
    YEARLY = "yearly"


@dataclass(frozen=True)
class StationSeries:
    """One station's gapless series; missing periods are ``None`` entries.

    ``start`` is the first period. For yearly series only ``start.year`` is
    meaningful and each position advances one calendar year.
    """

    station_id: str
    start: YearMonth
    values: tuple[Optional[float], ...]
    provenance: Provenance = Provenance.RAW
    granularity: Granularity = Granularity.MONTHLY

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError(f"series {self.station_id!r} has no values")
        vals = tuple(None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)
                     for v in self.values)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        object.__setattr__(self, "granularity", Granularity(self.granularity))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_present(self) -> int:
        return sum(v is not None for v in self.values)

    def period(self, i: int) -> YearMonth:
        """Calendar period of 0-based position ``i``."""
        if self.granularity is Granularity.YEARLY:
            return YearMonth(self.start.year + i, 1)
        return self.start.shift(i)

    @property
    def end(self) -> YearMonth:
        return self.period(len(self.values) - 1)

    def items(self) -> Iterator[tuple[YearMonth, Optional[float]]]:
        for i, v in enumerate(self.values):
            yield self.period(i), v

    def observed(self) -> tuple[list[int], list[float]]:
        """1-based time indices and values of the non-missing entries."""
        idx, vals = [], []
        for i, v in enumerate(self.values):
            if v is not None:
                idx.append(i + 1)
                vals.append(v)
        return idx, vals

    def suffix(self, start_index: int) -> "StationSeries":
        """Series from 1-based position ``start_index`` to the end."""
        if not 1 <= start_index <= len(self.values):
            raise IndexError(start_index)
        return replace(self, start=self.period(start_index - 1), values=self.values[start_index - 1:])

    def head(self, length: int) -> "StationSeries":
        if not 1 <= length <= len(self.values):
            raise IndexError(length)
        return replace(self, values=self.values[:length])

    def with_values(self, values: Sequence[Optional[float]], provenance: Provenance | None = None) -> "StationSeries":
        return replace(self, values=tuple(values), provenance=self.provenance if provenance is None else provenance)

    def reindexed(self, start: YearMonth, length: int) -> "StationSeries":
        """Place this monthly series on a wider axis, padding with gaps."""
        offset = self.start.ordinal() - start.ordinal()
        if offset < 0 or offset + len(self.values) > length:
            raise ValueError(f"series {self.station_id!r} does not fit the axis starting {start} of length {length}")
        padded = [None] * length
        padded[offset:offset + len(self.values)] = self.values
        return replace(self, start=start, values=tuple(padded))
