"""Regular-grid station series, sample filters and day classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta

import numpy as np

from . import _kernels
from .errors import EvenWindow, UnknownStation
from .ingest import SnapshotTable

DEFAULT_STEP = timedelta(minutes=2)
DEFAULT_HOLIDAYS = frozenset({date(2008, 6, 24)})


@dataclass(frozen=True)
class StationSeries:
    """Per-station samples on a regular grid; NaN marks a missing sample."""

    station_id: str
    grid_start: np.datetime64
    step: np.timedelta64
    bikes: np.ndarray
    total_slots: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid_start", np.datetime64(self.grid_start, "s"))
        object.__setattr__(self, "step", _as_td64(self.step))
        b = np.asarray(self.bikes, dtype=np.float64)
        t = np.asarray(self.total_slots, dtype=np.float64)
        if b.shape != t.shape:
            raise ValueError("bikes and total_slots must have equal length")
        object.__setattr__(self, "bikes", b)
        object.__setattr__(self, "total_slots", t)

    def __len__(self):
        return self.bikes.shape[0]

    @property
    def times(self):
        return self.grid_start + self.step * np.arange(len(self))


@dataclass(frozen=True)
class ServiceWindow:
    """Daily time window ``[start, end)`` in minutes after midnight."""

    start: int = 5 * 60
    end: int = 24 * 60

    @classmethod
    def parse(cls, text: str) -> ServiceWindow:
        a, b = text.split("-")
        return cls(_hhmm(a), _hhmm(b))

    def __str__(self):
        return f"{self.start // 60:02d}:{self.start % 60:02d}-{self.end // 60:02d}:{self.end % 60:02d}"


class DayClass(str, enum.Enum):
    WEEKDAY = "weekday"
    WEEKEND = "weekend"


@dataclass(frozen=True)
class HolidayCalendar:
    holidays: frozenset = field(default_factory=lambda: DEFAULT_HOLIDAYS)

    @classmethod
    def parse(cls, text: str) -> HolidayCalendar:
        items = [s.strip() for s in text.replace(";", ",").split(",") if s.strip()]
        return cls(frozenset(date.fromisoformat(s) for s in items))

    def __contains__(self, day):
        return _as_date(day) in self.holidays


DEFAULT_CALENDAR = HolidayCalendar()


def _hhmm(text):
    h, m = text.strip().split(":")
    minutes = int(h) * 60 + int(m)
    if not 0 <= minutes <= 24 * 60:
        raise ValueError(f"time of day out of range: {text!r}")
    return minutes


def _as_td64(step):
    if isinstance(step, timedelta):
        return np.timedelta64(int(step.total_seconds()), "s")
    return np.timedelta64(step, "s")


def _as_date(day):
    if isinstance(day, np.datetime64):
        return day.astype("datetime64[D]").astype(date)
    if isinstance(day, datetime):
        return day.date()
    return day


def _as_table(snapshots):
    if isinstance(snapshots, SnapshotTable):
        return snapshots
    return SnapshotTable.from_snapshots(list(snapshots))


def regularize(snapshots, station_id, step=DEFAULT_STEP, start=None, end=None) -> StationSeries:
    """Resample one station onto a grid of ``step`` spacing.

    Grid point ``t`` takes the latest observation in ``[t, t + step)``. By
    default the grid starts at the first snapshot floored to a multiple of
    ``step`` after midnight and ends one step after the last snapshot.
    """
    step64 = _as_td64(step)
    if step64 <= np.timedelta64(0, "s"):
        raise ValueError("step must be positive")
    table = _as_table(snapshots)
    try:
        col = table.column(station_id)
    except KeyError:
        raise UnknownStation(f"unknown station {station_id!r}") from None
    times = table.times
    if start is None:
        first = times[0]
        day0 = first.astype("datetime64[D]").astype("datetime64[s]")
        start = day0 + ((first - day0) // step64) * step64
    start = np.datetime64(start, "s")
    if end is None:
        end = start + ((times[-1] - start) // step64 + 1) * step64
    end = np.datetime64(end, "s")
    n = max(0, math.ceil((end - start) / step64))

    bikes = np.full(n, np.nan)
    total = np.full(n, np.nan)
    b = table.bikes[:, col]
    f = table.free_slots[:, col]
    ok = ~np.isnan(b) & ~np.isnan(f) & (times >= start) & (times < end)
    idx = ((times[ok] - start) // step64).astype(np.int64)
    if idx.size:
        # last write wins: keep the final occurrence of each bucket
        rev = idx[::-1]
        uniq, first_in_rev = np.unique(rev, return_index=True)
        pick = idx.size - 1 - first_in_rev
        bikes[uniq] = b[ok][pick]
        total[uniq] = (b + f)[ok][pick]
    return StationSeries(station_id, start, step64, bikes, total)


def filter_low_capacity(series: StationSeries, min_total: int = 10) -> StationSeries:
    """Mark samples whose total slot count is below ``min_total`` missing."""
    low = series.total_slots < min_total  # NaN compares False
    bikes = np.where(low, np.nan, series.bikes)
    total = np.where(low, np.nan, series.total_slots)
    return replace(series, bikes=bikes, total_slots=total)


def median_filter(values, window: int = 3) -> np.ndarray:
    """Centered running median over present (non-NaN) samples.

    Near the edges the window shrinks symmetrically, so ``[1, 9, 1]`` with
    window 3 becomes ``[1, 1, 1]``.
    """
    if window < 1 or window % 2 == 0:
        raise EvenWindow(f"median window must be odd and >= 1, got {window}")
    return _kernels.masked_median(np.asarray(values, dtype=np.float64), int(window))


def classify_day(day, calendar: HolidayCalendar = DEFAULT_CALENDAR) -> DayClass:
    d = _as_date(day)
    if d.weekday() >= 5 or d in calendar.holidays:
        return DayClass.WEEKEND
    return DayClass.WEEKDAY


def minutes_of_day(times) -> np.ndarray:
    t = np.asarray(times, dtype="datetime64[s]")
    return ((t - t.astype("datetime64[D]")) // np.timedelta64(60, "s")).astype(np.int64)


def clip_service_window(series: StationSeries, window: ServiceWindow = ServiceWindow()) -> StationSeries:
    """Mark samples outside the daily window missing (start inclusive, end exclusive)."""
    t = series.times
    secs = (t - t.astype("datetime64[D]")) / np.timedelta64(1, "s")
    inside = (secs >= window.start * 60) & (secs < window.end * 60)
    return replace(series,
                   bikes=np.where(inside, series.bikes, np.nan),
                   total_slots=np.where(inside, series.total_slots, np.nan))


def day_matrix(series: StationSeries, window: ServiceWindow = ServiceWindow()):
    """Reshape a series into one row per calendar day.

    Returns ``(dates, bikes, total)`` where each matrix has one column per
    grid step inside ``window``. Rows only exist for days with at least
    one sample in the window.
    """
    step_s = int(series.step / np.timedelta64(1, "s"))
    n_bins = (window.end - window.start) * 60 // step_s
    t = series.times
    day = t.astype("datetime64[D]")
    secs = ((t - day) / np.timedelta64(1, "s")).astype(np.int64)
    b = (secs - window.start * 60) // step_s
    ok = (b >= 0) & (b < n_bins) & (secs >= window.start * 60) & (secs < window.end * 60)
    ok &= ~np.isnan(series.bikes)
    if not ok.any():
        return [], np.empty((0, n_bins)), np.empty((0, n_bins))
    days = np.unique(day[ok])
    row = np.searchsorted(days, day[ok])
    bikes = np.full((days.size, n_bins), np.nan)
    total = np.full_like(bikes, np.nan)
    bikes[row, b[ok]] = series.bikes[ok]
    total[row, b[ok]] = series.total_slots[ok]
    return [d.astype(date) for d in days], bikes, total
