"""Short-term availability forecasts and their evaluation.

Two forecasters: persistence (the current count) and the cycle gradient
(current count plus the change the station's average cycle shows over
the offset). Cycles are built leave-one-out: the day being predicted
never contributes to the cycle used for it.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from .cycles import AVERAGE_FIRST, DailyCycle, _cycle_from_rows
from .errors import InsufficientData, MissingCycleBin, UnknownStation
from .preprocess import (
    DEFAULT_CALENDAR,
    DEFAULT_STEP,
    ServiceWindow,
    _as_table,
    _as_td64,
    classify_day,
    day_matrix,
    filter_low_capacity,
    regularize,
)

PERSISTENCE = "persistence"
GRADIENT = "gradient"


class Scheme(str, enum.Enum):
    ALL_OTHER_DAYS = "all-other-days"
    SAME_WEEKDAY = "same-weekday"
    WEEKDAY_WEEKEND = "weekday-weekend"

    def key(self, day: date, calendar=DEFAULT_CALENDAR) -> str:
        if self is Scheme.ALL_OTHER_DAYS:
            return "all"
        if self is Scheme.SAME_WEEKDAY:
            return ("mon", "tue", "wed", "thu", "fri", "sat", "sun")[day.weekday()]
        return classify_day(day, calendar).value


@dataclass(frozen=True)
class Forecast:
    station_id: str
    issue_time: object
    offset: timedelta
    predicted_bikes: float
    model: str
    fallback: bool = False


def _check_count(current):
    if not current >= 0:
        raise ValueError(f"bike count must be >= 0, got {current}")


def predict_persistence(current_bikes, offset=timedelta(0), station_id="", issue_time=None) -> Forecast:
    _check_count(current_bikes)
    return Forecast(station_id, issue_time, _as_timedelta(offset), float(current_bikes), PERSISTENCE)


def _as_timedelta(offset):
    if isinstance(offset, timedelta):
        return offset
    if isinstance(offset, np.timedelta64):
        return timedelta(seconds=int(offset / np.timedelta64(1, "s")))
    return timedelta(minutes=float(offset))


def _seconds_of_day(t):
    if isinstance(t, str):
        h, m = t.split(":")
        return int(h) * 3600 + int(m) * 60
    if isinstance(t, datetime):
        return t.hour * 3600 + t.minute * 60 + t.second
    if isinstance(t, np.datetime64):
        t = np.datetime64(t, "s")
        return int((t - t.astype("datetime64[D]")) / np.timedelta64(1, "s"))
    return int(t) * 60  # minutes


def _issue_date(t):
    if isinstance(t, datetime):
        return t.date()
    if isinstance(t, np.datetime64):
        return t.astype("datetime64[D]").astype(date)
    return None


def cycle_delta(cycle: DailyCycle, issue_time, offset) -> float:
    """Change of the cycle mean from the issue bin to the target bin."""
    s0 = _seconds_of_day(issue_time)
    s1 = s0 + int(_as_timedelta(offset).total_seconds())
    b0 = (s0 - cycle.bin_start * 60) // cycle.bin_step
    b1 = (s1 - cycle.bin_start * 60) // cycle.bin_step
    if not (0 <= b0 < len(cycle) and 0 <= b1 < len(cycle)):
        raise MissingCycleBin("issue or target time outside the cycle")
    a, b = cycle.mean[b0], cycle.mean[b1]
    if np.isnan(a) or np.isnan(b):
        raise MissingCycleBin("cycle has no support at the issue or target bin")
    return float(b - a)


def predict_gradient(current_bikes, issue_time, offset, model, capacity, station_id=None,
                     strict=False) -> Forecast:
    """Persistence plus the cycle's change over ``offset``, clamped to [0, capacity].

    ``model`` is a :class:`CycleModel` or a single :class:`DailyCycle`.
    When the cycle lacks either bin the persistence value is returned with
    ``fallback=True`` (or :class:`MissingCycleBin` is raised if ``strict``).
    """
    _check_count(current_bikes)
    offset = _as_timedelta(offset)
    if isinstance(model, CycleModel):
        day = _issue_date(issue_time)
        if day is None:
            raise ValueError("a dated issue time is needed with a CycleModel")
        cycle = model.cycle_for(station_id, day)
        tag = f"{GRADIENT}:{model.scheme.value}"
    else:
        cycle = model
        station_id = station_id or cycle.key
        tag = GRADIENT
    try:
        if cycle is None:
            raise MissingCycleBin(f"no cycle for station {station_id!r}")
        delta = cycle_delta(cycle, issue_time, offset)
    except MissingCycleBin:
        if strict:
            raise
        return Forecast(station_id, issue_time, offset, float(current_bikes), tag, True)
    value = min(max(current_bikes + delta, 0.0), float(capacity))
    return Forecast(station_id, issue_time, offset, value, tag)


@dataclass
class StationDays:
    """One station's filtered samples, one row per day of the service window."""

    station_id: str
    dates: list
    bikes: np.ndarray
    total: np.ndarray
    step_s: int
    window: ServiceWindow
    _cache: dict = field(default_factory=dict, repr=False)

    def cycle(self, key, scheme, excluded, calendar, median_window=3, order=AVERAGE_FIRST):
        ck = (key, scheme, excluded, median_window, order)
        if ck not in self._cache:
            keep = [i for i, d in enumerate(self.dates)
                    if d != excluded and scheme.key(d, calendar) == key]
            if not keep:
                self._cache[ck] = None
            else:
                self._cache[ck] = _cycle_from_rows(
                    self.station_id, key, self.bikes[keep], [self.dates[i] for i in keep],
                    self.window, self.step_s, median_window, order)
        return self._cache[ck]


def station_days(store, stations=None, step=DEFAULT_STEP, window=ServiceWindow(),
                 min_total=10) -> dict:
    table = _as_table(store)
    if len(table) == 0:
        raise InsufficientData("empty store")
    step_s = int(_as_td64(step) / np.timedelta64(1, "s"))
    out = {}
    for sid in (stations or table.station_ids):
        series = filter_low_capacity(regularize(table, sid, step), min_total)
        dates, bikes, total = day_matrix(series, window)
        out[sid] = StationDays(sid, dates, bikes, total, step_s, window)
    return out


@dataclass
class CycleModel:
    scheme: Scheme
    cycles: dict  # (station_id, key) -> DailyCycle
    excluded_day: date | None
    calendar: object = DEFAULT_CALENDAR

    def cycle_for(self, station_id, day) -> DailyCycle | None:
        return self.cycles.get((station_id, self.scheme.key(day, self.calendar)))


def build_cycle_model(store, scheme=Scheme.SAME_WEEKDAY, excluded_day=None, stations=None,
                      calendar=DEFAULT_CALENDAR, median_window=3, window=ServiceWindow(),
                      step=DEFAULT_STEP, min_total=10) -> CycleModel:
    """Per-station cycles for every scheme key, leaving ``excluded_day`` out.

    ``store`` may be a snapshot table/list or the output of :func:`station_days`.
    """
    scheme = Scheme(scheme)
    days = store if isinstance(store, dict) else station_days(store, stations, step, window, min_total)
    if stations is not None:
        missing = [s for s in stations if s not in days]
        if missing:
            raise UnknownStation(f"unknown stations {missing}")
        days = {s: days[s] for s in stations}
    cycles = {}
    for sid, sd in days.items():
        for key in sorted({scheme.key(d, calendar) for d in sd.dates}):
            c = sd.cycle(key, scheme, excluded_day, calendar, median_window)
            if c is not None:
                cycles[(sid, key)] = c
    if not cycles:
        raise InsufficientData("no days left after excluding the prediction day")
    return CycleModel(scheme, cycles, excluded_day, calendar)


class PersistenceModel:
    name = PERSISTENCE
    scheme = ""

    def predict_day(self, sd: StationDays, d: int, off: int, calendar):
        cur = sd.bikes[d, : sd.bikes.shape[1] - off]
        return cur, np.zeros(cur.shape, dtype=bool)


class GradientModel:
    """Leave-one-out cycle-gradient forecaster used by :func:`evaluate`."""

    name = GRADIENT

    def __init__(self, scheme=Scheme.SAME_WEEKDAY, median_window=3):
        self.scheme = Scheme(scheme)
        self.median_window = median_window

    def predict_day(self, sd: StationDays, d: int, off: int, calendar):
        n = sd.bikes.shape[1] - off
        cur = sd.bikes[d, :n]
        day = sd.dates[d]
        cyc = sd.cycle(self.scheme.key(day, calendar), self.scheme, day, calendar,
                       self.median_window)
        if cyc is None:
            return cur, np.ones(n, dtype=bool)
        delta = cyc.mean[off:off + n] - cyc.mean[:n]
        fallback = np.isnan(delta)
        pred = np.clip(cur + np.where(fallback, 0.0, delta), 0.0, sd.total[d, :n])
        return np.where(fallback, cur, pred), fallback


@dataclass(frozen=True)
class ErrorRow:
    model: str
    scheme: str
    offset_min: int
    mae: float
    bias: float
    n_points: int
    n_fallback: int = 0


def evaluate(store, models, offsets, stations=None, calendar=DEFAULT_CALENDAR,
             window=ServiceWindow(), step=DEFAULT_STEP, min_total=10) -> list:
    """Mean absolute error per model and offset over all stations, days and issue bins.

    Offsets are minutes (or timedeltas) and must be positive multiples of
    the grid step. Points whose actual or current value is missing are
    skipped; targets past the end of the service window are not scored.
    """
    days = store if isinstance(store, dict) else station_days(store, stations, step, window, min_total)
    if stations is not None:
        days = {s: days[s] for s in stations}
    step_s = int(_as_td64(step) / np.timedelta64(1, "s"))
    rows = []
    for model in models:
        for off in offsets:
            sec = int(_as_timedelta(off).total_seconds())
            if sec <= 0 or sec % step_s:
                raise ValueError(f"offset {off} must be a positive multiple of the grid step")
            o = sec // step_s
            abs_sum = sgn_sum = 0.0
            n = n_fb = 0
            for sid in sorted(days):
                sd = days[sid]
                nb = sd.bikes.shape[1]
                if o >= nb:
                    continue
                for d in range(len(sd.dates)):
                    pred, fb = model.predict_day(sd, d, o, calendar)
                    actual = sd.bikes[d, o:]
                    ok = ~np.isnan(actual) & ~np.isnan(sd.bikes[d, :nb - o]) & ~np.isnan(pred)
                    err = pred[ok] - actual[ok]
                    abs_sum += float(np.abs(err).sum())
                    sgn_sum += float(err.sum())
                    n += int(ok.sum())
                    n_fb += int((fb & ok).sum())
            scheme = getattr(model, "scheme", "")
            rows.append(ErrorRow(model.name, scheme.value if isinstance(scheme, Scheme) else str(scheme),
                                 sec // 60, abs_sum / n if n else float("nan"),
                                 sgn_sum / n if n else float("nan"), n, n_fb))
    return rows


def write_error_table(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "scheme", "offset_min", "mae", "bias", "n_points"])
        for r in rows:
            w.writerow([r.model, r.scheme, r.offset_min, f"{r.mae:.6f}", f"{r.bias:.6f}", r.n_points])
