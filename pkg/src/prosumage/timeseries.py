"""Fixed-step annual time series, household profile sets and CSV ingestion.

All series span one non-leap year: 17,520 half-hourly steps or 8,760 hourly
steps. Values are stored as read-only float64 arrays so a series can be shared
between worker processes without copying concerns.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

HOURS_PER_YEAR = 8760
STEPS_PER_YEAR = {30: 2 * HOURS_PER_YEAR, 60: HOURS_PER_YEAR}


class Unit(str, Enum):
    KWH = "kWh"  # per step
    MWH = "MWh"  # per step
    MW = "MW"
    AVAILABILITY = "availability"


class ParseError(ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path}:" if path else ""
        where += f"{line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    values: np.ndarray
    step_minutes: int = 60
    unit: Unit = Unit.MWH
    start_year: int = 2030

    def __post_init__(self):
        if self.step_minutes not in STEPS_PER_YEAR:
            raise ValueError(f"step_minutes must be 30 or 60, got {self.step_minutes}")
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("values must be one-dimensional")
        expected = STEPS_PER_YEAR[self.step_minutes]
        if arr.shape[0] != expected:
            raise ValueError(
                f"a {self.step_minutes}-minute series needs {expected} steps, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite")
        unit = Unit(self.unit)
        if unit is Unit.AVAILABILITY and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("availability values must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "unit", unit)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (self.step_minutes == other.step_minutes and self.unit is other.unit
                and self.start_year == other.start_year
                and np.array_equal(self.values, other.values))

    @property
    def step_hours(self) -> float:
        return self.step_minutes / 60.0

    def replace(self, values=None, unit: Unit | None = None) -> "TimeSeries":
        """New series on the same grid; the original is left untouched."""
        return TimeSeries(self.values if values is None else values, self.step_minutes,
                          self.unit if unit is None else unit, self.start_year)

    def __add__(self, other: "TimeSeries") -> "TimeSeries":
        _check_compatible(self, other)
        return self.replace(self.values + other.values)

    def __sub__(self, other: "TimeSeries") -> "TimeSeries":
        _check_compatible(self, other)
        return self.replace(self.values - other.values)

    def scale(self, factor: float, unit: Unit | None = None) -> "TimeSeries":
        return self.replace(self.values * factor, unit)


def _check_compatible(a: TimeSeries, b: TimeSeries) -> None:
    if a.step_minutes != b.step_minutes or len(a) != len(b):
        raise ValueError("series resolution or length mismatch")
    if a.unit is not b.unit:
        raise ValueError(f"unit mismatch: {a.unit.value} vs {b.unit.value}")


def energy_series(values, step_minutes: int = 30, unit: Unit = Unit.KWH,
                  start_year: int = 2030) -> TimeSeries:
    return TimeSeries(values, step_minutes, unit, start_year)


@dataclass(frozen=True)
class ProfileSet:
    """Underlying demand (kWh/step) and PV yield (kWh per kWp per step) of one household."""

    household_id: str
    demand: TimeSeries
    pv_yield: TimeSeries

    def __post_init__(self):
        if self.demand.step_minutes != self.pv_yield.step_minutes or len(self.demand) != len(self.pv_yield):
            raise ValueError(f"{self.household_id}: demand and pv_yield grids differ")
        if self.demand.values.min() < 0 or self.pv_yield.values.min() < 0:
            raise ValueError(f"{self.household_id}: profile values must be non-negative")


def resample_to_hourly(s: TimeSeries) -> TimeSeries:
    """Sum consecutive half-hour pairs into hourly energy."""
    if s.step_minutes != 30:
        raise ValueError(f"expected a 30-minute series, got {s.step_minutes}-minute")
    if s.unit not in (Unit.KWH, Unit.MWH):
        raise ValueError("only per-step energy series can be summed to hourly")
    v = s.values
    return TimeSeries(v[0::2] + v[1::2], 60, s.unit, s.start_year)


def annual_sum(s: TimeSeries) -> float:
    return float(np.sum(s.values))


# --------------------------------------------------------------------------- CSV


@dataclass
class ProfileSchema:
    """Column layout of a wide household profile CSV.

    Each household contributes two columns, ``<id><demand_suffix>`` and
    ``<id><pv_suffix>``. If ``pv_capacity_kwp`` has an entry for a household the
    PV column is gross generation (kWh/step) and is divided by that capacity;
    otherwise it is already a per-kWp yield.
    """

    timestamp: str = "timestamp"
    demand_suffix: str = "_demand"
    pv_suffix: str = "_pv"
    step_minutes: int = 30
    start_year: int = 2030
    pv_capacity_kwp: dict[str, float] = field(default_factory=dict)


@dataclass
class IngestReport:
    profiles: list[ProfileSet]
    rejected: dict[str, str]

    @property
    def n_rejected(self) -> int:
        return len(self.rejected)


def _parse_float(text: str, line: int, column: str, path: str) -> float:
    text = text.strip()
    if text == "":
        return np.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: not a number: {text!r}", line, path) from None
    if np.isinf(value):
        raise ParseError(f"column {column!r}: infinite value", line, path)
    return value


def _is_feb29(stamp: datetime) -> bool:
    return stamp.month == 2 and stamp.day == 29


def read_profile_table(path: str | Path, schema: ProfileSchema | None = None):
    """Parse the CSV into (timestamps, {column: array}); blanks become NaN."""
    schema = schema or ProfileSchema()
    path = str(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1, path) from None
        header = [h.strip() for h in header]
        if schema.timestamp not in header:
            raise ParseError(f"missing timestamp column {schema.timestamp!r}", 1, path)
        ts_idx = header.index(schema.timestamp)
        width = len(header)
        stamps: list[datetime] = []
        rows: list[list[float]] = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} fields, got {len(row)}", line, path)
            try:
                stamp = datetime.fromisoformat(row[ts_idx].strip())
            except ValueError:
                raise ParseError(f"bad ISO-8601 timestamp {row[ts_idx]!r}", line, path) from None
            if _is_feb29(stamp):
                continue
            stamps.append(stamp)
            rows.append([_parse_float(c, line, header[j], path) if j != ts_idx else 0.0
                         for j, c in enumerate(row)])
    data = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    columns = {h: data[:, j] for j, h in enumerate(header) if j != ts_idx}
    return stamps, columns


def _missing_steps(stamps: Sequence[datetime], step_minutes: int) -> int:
    """Steps absent from the uniform grid implied by the first timestamp."""
    expected = STEPS_PER_YEAR[step_minutes]
    if not stamps:
        return expected
    missing = expected - len(stamps)
    step_s = step_minutes * 60
    for a, b in zip(stamps, stamps[1:]):
        gap = (b - a).total_seconds()
        # a Feb 29 drop leaves a one-day jump that is not a data gap
        if gap != step_s and not (a.month == 2 and a.day == 28 and b.month == 3 and b.day == 1):
            missing = max(missing, 1)
    return max(missing, 0)


def ingest_profiles(path: str | Path, schema: ProfileSchema | None = None) -> IngestReport:
    """Load every complete household from a wide profile CSV.

    Households with any blank cell are rejected, as are all households if the
    timestamp grid itself has holes. Rejections are logged and returned in the
    report rather than raised.
    """
    schema = schema or ProfileSchema()
    stamps, columns = read_profile_table(path, schema)
    ids = [c[: -len(schema.demand_suffix)] for c in columns if c.endswith(schema.demand_suffix)]
    rejected: dict[str, str] = {}
    profiles: list[ProfileSet] = []
    grid_gap = _missing_steps(stamps, schema.step_minutes)
    for hid in ids:
        pv_col = hid + schema.pv_suffix
        if pv_col not in columns:
            raise ParseError(f"household {hid!r} has no {pv_col!r} column", 1, str(path))
        demand = columns[hid + schema.demand_suffix]
        pv = columns[pv_col]
        if grid_gap:
            rejected[hid] = f"timestamp grid has {grid_gap} missing step(s)"
            continue
        n_nan = int(np.isnan(demand).sum() + np.isnan(pv).sum())
        if n_nan:
            rejected[hid] = f"{n_nan} missing value(s)"
            continue
        if demand.min() < 0 or pv.min() < 0:
            rejected[hid] = "negative values"
            continue
        cap = schema.pv_capacity_kwp.get(hid)
        yield_ = pv / cap if cap else pv
        profiles.append(ProfileSet(
            hid,
            TimeSeries(demand, schema.step_minutes, Unit.KWH, schema.start_year),
            TimeSeries(yield_, schema.step_minutes, Unit.KWH, schema.start_year),
        ))
    for hid, why in rejected.items():
        logger.warning("rejected household %s: %s", hid, why)
    logger.info("ingested %d household(s), rejected %d", len(profiles), len(rejected))
    return IngestReport(profiles, rejected)


def year_timestamps(step_minutes: int, year: int = 2030) -> list[str]:
    """ISO-8601 stamps for a non-leap year grid."""
    start = np.datetime64(f"{year:04d}-01-01T00:00")
    n = STEPS_PER_YEAR[step_minutes]
    stamps = start + np.arange(n) * np.timedelta64(step_minutes, "m")
    if _is_leap(year):
        # skip Feb 29 so the grid still holds 8,760 hours
        feb29 = np.datetime64(f"{year:04d}-02-29T00:00")
        stamps = np.where(stamps >= feb29, stamps + np.timedelta64(1, "D"), stamps)
    return [str(s) for s in stamps]


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def write_profiles(path: str | Path, profiles: Iterable[ProfileSet], schema: ProfileSchema | None = None) -> None:
    """Inverse of :func:`ingest_profiles` (per-kWp yield columns)."""
    schema = schema or ProfileSchema()
    profiles = list(profiles)
    if not profiles:
        raise ValueError("nothing to write")
    step = profiles[0].demand.step_minutes
    stamps = year_timestamps(step, profiles[0].demand.start_year)
    header = [schema.timestamp]
    cols = []
    for p in profiles:
        header += [p.household_id + schema.demand_suffix, p.household_id + schema.pv_suffix]
        cols += [p.demand.values, p.pv_yield.values]
    write_columns(path, header, stamps, cols)


def write_columns(path: str | Path, header: Sequence[str], stamps: Sequence[str],
                  columns: Sequence[np.ndarray]) -> None:
    """Write a timestamped wide CSV with shortest round-trip float formatting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    rows = zip(stamps, *[c.tolist() for c in columns])
    w.writerows([s, *map(repr, vals)] for s, *vals in rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_series(path: str | Path, series: TimeSeries, name: str | None = None) -> None:
    name = name or series.unit.value
    write_columns(path, ["timestamp", name], year_timestamps(series.step_minutes, series.start_year),
                  [series.values])


def read_series(path: str | Path, column: str | None = None, step_minutes: int = 60,
                unit: Unit = Unit.MWH, start_year: int = 2030) -> TimeSeries:
    """Read one column of a timestamped CSV as a complete series (gaps are errors)."""
    schema = ProfileSchema(step_minutes=step_minutes)
    stamps, columns = read_profile_table(path, schema)
    if column is None:
        if len(columns) != 1:
            raise ParseError(f"expected a single value column, found {list(columns)}", 1, str(path))
        column = next(iter(columns))
    if column not in columns:
        raise ParseError(f"missing column {column!r}", 1, str(path))
    values = columns[column]
    if np.isnan(values).any() or _missing_steps(stamps, step_minutes):
        raise ParseError(f"column {column!r} has gaps", None, str(path))
    return TimeSeries(values, step_minutes, unit, start_year)
