"""Daily environmental series: CSV schema, parsing, validation, gap filling.

This module is the single source of truth for the data schema. Every other
module consumes :class:`EnvSeries` built here and relies on the guarantees
of :func:`validate` (strictly increasing unique dates, range checks).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Mapping

CSV_HEADER = ("date", "aod", "temperature", "humidity", "wind_speed", "solar_irradiance")

VARIABLES = ("aod", "temperature", "humidity", "wind_speed", "solar_irradiance")


class IngestError(Exception):
    """Base class for ingest failures."""


class CsvSchemaError(IngestError):
    """Header row does not match the expected schema."""


class CsvRowError(IngestError):
    """A data cell could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateDateError(IngestError):
    """The same calendar day appears more than once."""


class MergeError(IngestError):
    """AOD merge failed because the date sets do not line up."""


@dataclass(frozen=True)
class EnvRecord:
    """One day of observations for the five tracked variables."""

    date: date
    aod: float
    temperature: float
    humidity: float
    wind_speed: float
    solar_irradiance: float


class EnvSeries:
    """Date-ordered daily records with an optional location tag.

    Stored column-wise; ``records`` materialises :class:`EnvRecord` views.
    Construction enforces strictly increasing unique dates. Value-range
    problems are *not* rejected here - they are reported by :func:`validate`
    so that callers can decide what to do with suspect data.
    """

    def __init__(self, records: Iterable[EnvRecord], lat: float = 0.0, lon: float = 0.0):
        recs = sorted(records, key=lambda r: r.date)
        for a, b in zip(recs, recs[1:]):
            if a.date == b.date:
                raise DuplicateDateError(f"duplicate date {a.date.isoformat()}")
        self._records: tuple[EnvRecord, ...] = tuple(recs)
        self.lat = float(lat)
        self.lon = float(lon)

    @property
    def records(self) -> tuple[EnvRecord, ...]:
        return self._records

    @property
    def dates(self) -> list[date]:
        return [r.date for r in self._records]

    def column(self, name: str) -> list[float]:
        if name not in VARIABLES:
            raise KeyError(name)
        return [getattr(r, name) for r in self._records]

    @property
    def span(self) -> tuple[date, date] | None:
        if not self._records:
            return None
        return self._records[0].date, self._records[-1].date

    def __len__(self) -> int:
        return len(self._records)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EnvSeries):
            return NotImplemented
        return (
            self._records == other._records
            and self.lat == other.lat
            and self.lon == other.lon
        )


@dataclass
class ValidationReport:
    row_count: int
    gap_dates: list[date] = field(default_factory=list)
    out_of_range: list[tuple[date, str, float]] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.out_of_range:
            return "fail"
        if self.gap_dates or self.row_count == 0:
            return "warn"
        return "pass"


def parse_env_csv(text: str | bytes) -> EnvSeries:
    """Parse the canonical CSV schema into an :class:`EnvSeries`.

    Header must be exactly ``date,aod,temperature,humidity,wind_speed,
    solar_irradiance``; dates ISO-8601. Rows may arrive unsorted; output is
    sorted by date. Duplicate dates and unparseable cells are rejected.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvSchemaError("empty input, expected header row") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise CsvSchemaError(
            f"bad header {header!r}, expected {','.join(CSV_HEADER)}"
        )
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(CSV_HEADER):
            raise CsvRowError(lineno, f"expected {len(CSV_HEADER)} cells, got {len(row)}")
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise CsvRowError(lineno, f"bad date {row[0]!r}: {exc}") from None
        values = []
        for name, cell in zip(CSV_HEADER[1:], row[1:]):
            cell = cell.strip()
            if cell == "":
                values.append(math.nan)
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise CsvRowError(lineno, f"bad {name} value {cell!r}") from None
        records.append(EnvRecord(day, *values))
    return EnvSeries(records)


def serialize_env_csv(series: EnvSeries) -> str:
    """Inverse of :func:`parse_env_csv`; floats use shortest round-trip repr."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in series.records:
        writer.writerow(
            [r.date.isoformat()]
            + [repr(getattr(r, name)) for name in CSV_HEADER[1:]]
        )
    return out.getvalue()


def _in_range(name: str, value: float) -> bool:
    if math.isnan(value) or math.isinf(value):
        return False
    if name == "humidity":
        return 0.0 <= value <= 100.0
    if name in ("aod", "wind_speed", "solar_irradiance"):
        return value >= 0.0
    return True  # temperature is unconstrained


def validate(series: EnvSeries) -> ValidationReport:
    """Report gaps and out-of-range values. Never raises.

    ``verdict`` is ``fail`` iff any value is out of range (NaN and infinities
    count as out of range), ``warn`` on gaps or an empty series, else
    ``pass``.
    """
    report = ValidationReport(row_count=len(series))
    span = series.span
    if span is not None:
        have = set(series.dates)
        day = span[0]
        while day <= span[1]:
            if day not in have:
                report.gap_dates.append(day)
            day += timedelta(days=1)
    for r in series.records:
        for name in VARIABLES:
            value = getattr(r, name)
            if not _in_range(name, value):
                report.out_of_range.append((r.date, name, value))
    return report


def require_valid(series: EnvSeries) -> EnvSeries:
    """Boundary guard: raise if validation verdict is ``fail``."""
    report = validate(series)
    if report.verdict == "fail":
        first = report.out_of_range[0]
        raise IngestError(
            f"series failed validation ({len(report.out_of_range)} out-of-range values, "
            f"first: {first[1]}={first[2]} on {first[0].isoformat()})"
        )
    return series


def merge_aod(series: EnvSeries, aod_by_date: Mapping[date, float]) -> EnvSeries:
    """Replace the AOD column with values keyed by date.

    Every date in ``series`` must be present in ``aod_by_date``; a miss is a
    :class:`MergeError`. Extra AOD dates are ignored.
    """
    missing = [r.date for r in series.records if r.date not in aod_by_date]
    if missing:
        raise MergeError(
            f"{len(missing)} series dates missing from AOD input, first: {missing[0].isoformat()}"
        )
    merged = [
        EnvRecord(
            r.date,
            float(aod_by_date[r.date]),
            r.temperature,
            r.humidity,
            r.wind_speed,
            r.solar_irradiance,
        )
        for r in series.records
    ]
    return EnvSeries(merged, lat=series.lat, lon=series.lon)


def parse_aod_csv(text: str | bytes) -> dict[date, float]:
    """Parse a two-column ``date,aod`` CSV (or the full schema) into a map."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CsvSchemaError("empty input, expected header row") from None
    if header[:2] == ["date", "aod"]:
        aod_col = 1
    elif tuple(header) == CSV_HEADER:
        aod_col = 1
    else:
        raise CsvSchemaError(f"bad header {header!r}, expected date,aod")
    out: dict[date, float] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        try:
            day = date.fromisoformat(row[0].strip())
            value = float(row[aod_col])
        except (ValueError, IndexError) as exc:
            raise CsvRowError(lineno, str(exc)) from None
        if day in out:
            raise DuplicateDateError(f"duplicate date {day.isoformat()}")
        out[day] = value
    return out


def fill_gaps(series: EnvSeries) -> EnvSeries:
    """Forward-fill interior gap days with the previous day's values.

    Never applied implicitly: gaps survive ingestion untouched unless the
    caller asks for this. Leading gaps cannot be filled (no prior value).
    """
    span = series.span
    if span is None:
        return series
    by_date = {r.date: r for r in series.records}
    filled = []
    prev: EnvRecord | None = None
    day = span[0]
    while day <= span[1]:
        rec = by_date.get(day)
        if rec is None:
            rec = EnvRecord(
                day, prev.aod, prev.temperature, prev.humidity,
                prev.wind_speed, prev.solar_irradiance,
            )
        filled.append(rec)
        prev = rec
        day += timedelta(days=1)
    return EnvSeries(filled, lat=series.lat, lon=series.lon)
