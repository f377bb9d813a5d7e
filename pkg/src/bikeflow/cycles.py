"""Average daily activity cycles, weekly patterns and geographic deltas."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .errors import EmptyInput, NoMatchingDays, TimeOffGrid
from .geo import haversine
from .preprocess import (
    DEFAULT_CALENDAR,
    DEFAULT_STEP,
    DayClass,
    ServiceWindow,
    StationSeries,
    _as_table,
    _as_td64,
    classify_day,
    day_matrix,
    filter_low_capacity,
    median_filter,
    regularize,
)

GLOBAL = "GLOBAL"
AVERAGE_FIRST = "average_first"
FILTER_FIRST = "filter_first"


@dataclass(frozen=True)
class DailyCycle:
    """Per-bin mean and population stdev of bike counts over a set of days.

    ``mean`` and ``stdev`` are NaN in bins no day contributed to
    (``support == 0``).
    """

    key: str
    day_class: object
    bin_start: int  # minutes after midnight
    bin_step: int  # seconds
    mean: np.ndarray
    stdev: np.ndarray
    support: np.ndarray
    days: tuple = ()

    def __len__(self):
        return self.mean.shape[0]

    @property
    def n_days(self):
        return len(self.days)

    def bin_of(self, when) -> int:
        """Index of the bin starting exactly at ``when`` (``"HH:MM"`` or minutes)."""
        minutes = _minutes(when)
        offset = minutes * 60 - self.bin_start * 60
        if offset % self.bin_step or not 0 <= offset // self.bin_step < len(self):
            raise TimeOffGrid(f"{when!r} is not on the cycle grid")
        return offset // self.bin_step

    def value_at(self, when) -> float:
        return float(self.mean[self.bin_of(when)])

    def time_labels(self):
        out = []
        for i in range(len(self)):
            s = self.bin_start * 60 + i * self.bin_step
            out.append(f"{s // 3600:02d}:{s % 3600 // 60:02d}")
        return out


def _minutes(when):
    if isinstance(when, str):
        h, m = when.split(":")
        return int(h) * 60 + int(m)
    return int(when)


def _cycle_from_rows(key, label, rows, days, window, step_s, median_window, order):
    rows = np.asarray(rows, dtype=np.float64)
    present = ~np.isnan(rows)
    support = present.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        counts = np.where(support > 0, support, 1)
        raw_mean = np.where(present, rows, 0.0).sum(axis=0) / counts
        dev = np.where(present, rows - raw_mean, 0.0)
        stdev = np.sqrt((dev ** 2).sum(axis=0) / counts)
    if order == FILTER_FIRST:
        filtered = np.vstack([median_filter(r, median_window) for r in rows]) if rows.size else rows
        fp = ~np.isnan(filtered)
        fs = fp.sum(axis=0)
        mean = np.where(fp, filtered, 0.0).sum(axis=0) / np.where(fs > 0, fs, 1)
        mean[fs == 0] = np.nan
    elif order == AVERAGE_FIRST:
        mean = raw_mean.copy()
        mean[support == 0] = np.nan
        mean = median_filter(mean, median_window)
    else:
        raise ValueError(f"unknown median order {order!r}")
    mean[support == 0] = np.nan
    stdev[support == 0] = np.nan
    stdev[support == 1] = 0.0
    return DailyCycle(key, label, window.start, step_s, mean, stdev,
                      support.astype(np.int64), tuple(days))


def _stack_days(series_list, window):
    """Daily rows of one or more series of the same station."""
    dates, rows, step_s = [], [], None
    if isinstance(series_list, StationSeries):
        series_list = [series_list]
    for s in series_list:
        st = int(s.step / np.timedelta64(1, "s"))
        if step_s is None:
            step_s = st
        elif st != step_s:
            raise ValueError("series must share one step")
        d, b, _ = day_matrix(s, window)
        dates.extend(d)
        rows.extend(b)
    if step_s is None:
        step_s = int(DEFAULT_STEP.total_seconds())
    return dates, rows, step_s


def station_cycle(series, day_class=DayClass.WEEKDAY, calendar=DEFAULT_CALENDAR,
                  window=ServiceWindow(), median_window=3, order=AVERAGE_FIRST,
                  exclude=()) -> DailyCycle:
    """Average one station's filtered daily series over days of a class.

    ``day_class`` is a :class:`DayClass`, or any callable ``date -> bool``
    selecting the days to average. Days listed in ``exclude`` are dropped.
    """
    dates, rows, step_s = _stack_days(series, window)
    select = _day_selector(day_class, calendar)
    exclude = set(exclude)
    keep = [i for i, d in enumerate(dates) if d not in exclude and select(d)]
    if not keep:
        raise NoMatchingDays(f"no days of class {day_class!r}")
    sid = series.station_id if isinstance(series, StationSeries) else series[0].station_id
    return _cycle_from_rows(sid, day_class, [rows[i] for i in keep], [dates[i] for i in keep],
                            window, step_s, median_window, order)


def _day_selector(day_class, calendar):
    if callable(day_class) and not isinstance(day_class, DayClass):
        return day_class
    if day_class is None:
        return lambda d: True
    cls = DayClass(day_class)
    return lambda d: classify_day(d, calendar) == cls


def global_cycle(snapshots, day_class=DayClass.WEEKDAY, min_total_slots=8000,
                 step=DEFAULT_STEP, calendar=DEFAULT_CALENDAR, window=ServiceWindow(),
                 median_window=3) -> DailyCycle:
    """City-wide cycle of the total number of parked bikes.

    Snapshots whose summed slots (bikes + free) do not exceed
    ``min_total_slots`` are dropped before binning. An empty cycle is
    returned when no day qualifies.
    """
    table = _as_table(snapshots)
    step_s = int(_as_td64(step) / np.timedelta64(1, "s"))
    n_bins = (window.end - window.start) * 60 // step_s
    empty = DailyCycle(GLOBAL, day_class, window.start, step_s, np.full(n_bins, np.nan),
                       np.full(n_bins, np.nan), np.zeros(n_bins, dtype=np.int64))
    if len(table) == 0:
        return empty
    bikes = np.nansum(table.bikes, axis=1)
    slots = np.nansum(table.total_slots, axis=1)
    keep = slots > min_total_slots
    t = table.times[keep]
    day = t.astype("datetime64[D]")
    secs = ((t - day) / np.timedelta64(1, "s")).astype(np.int64)
    ok = (secs >= window.start * 60) & (secs < window.end * 60)
    b = (secs[ok] - window.start * 60) // step_s
    day, vals = day[ok], bikes[keep][ok]
    select = _day_selector(day_class, calendar)
    days = [d for d in np.unique(day) if select(d.astype(date))]
    if not days:
        return empty
    rows = np.full((len(days), n_bins), np.nan)
    pos = {d: i for i, d in enumerate(days)}
    for d, bi, v in zip(day, b, vals):  # sorted by time, so later snapshots win
        i = pos.get(d)
        if i is not None:
            rows[i, bi] = v
    return _cycle_from_rows(GLOBAL, day_class, rows, [d.astype(date) for d in days],
                            window, step_s, median_window, AVERAGE_FIRST)


def station_cycles(snapshots, day_class=DayClass.WEEKDAY, calendar=DEFAULT_CALENDAR,
                   window=ServiceWindow(), step=DEFAULT_STEP, min_total=10, median_window=3,
                   order=AVERAGE_FIRST, exclude=(), stations=None) -> dict:
    """Regularize, capacity-filter and average every station.

    Stations without a matching day are left out of the result.
    """
    table = _as_table(snapshots)
    if len(table) == 0:
        raise EmptyInput("no snapshots")
    out = {}
    for sid in (stations or table.station_ids):
        series = filter_low_capacity(regularize(table, sid, step), min_total)
        try:
            out[sid] = station_cycle(series, day_class, calendar, window, median_window,
                                     order, exclude)
        except NoMatchingDays:
            continue
    return out


WEEKDAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def weekly_pattern(series, window=ServiceWindow(), median_window=3,
                   order=AVERAGE_FIRST) -> dict[int, DailyCycle]:
    """Cycles keyed by day of week (0 = Monday) for the weekdays present."""
    dates, rows, step_s = _stack_days(series, window)
    if not dates:
        raise NoMatchingDays("no data for any day of the week")
    sid = series.station_id if isinstance(series, StationSeries) else series[0].station_id
    out = {}
    for wd in range(7):
        keep = [i for i, d in enumerate(dates) if d.weekday() == wd]
        if keep:
            out[wd] = _cycle_from_rows(sid, wd, [rows[i] for i in keep], [dates[i] for i in keep],
                                       window, step_s, median_window, order)
    return out


def geo_delta(cycles: dict, t, t0="05:00") -> dict:
    """Change of each station's mean load from time ``t0`` to ``t``.

    Stations missing either bin are omitted.
    """
    out = {}
    for sid, cyc in cycles.items():
        i, i0 = cyc.bin_of(t), cyc.bin_of(t0)
        a, b = cyc.mean[i], cyc.mean[i0]
        if np.isnan(a) or np.isnan(b):
            continue
        out[sid] = float(a - b)
    return out


@dataclass(frozen=True)
class GeoDeltaGrid:
    south: float
    west: float
    north: float
    east: float
    values: np.ndarray  # rows south -> north, cols west -> east
    reference_time: str = ""
    baseline_time: str = "05:00"

    @property
    def shape(self):
        return self.values.shape

    def cell_bounds(self, r, c):
        rows, cols = self.values.shape
        dlat = (self.north - self.south) / rows
        dlon = (self.east - self.west) / cols
        return (self.south + r * dlat, self.west + c * dlon,
                self.south + (r + 1) * dlat, self.west + (c + 1) * dlon)

    def cell_centers(self):
        rows, cols = self.values.shape
        lat = self.south + (np.arange(rows) + 0.5) * (self.north - self.south) / rows
        lon = self.west + (np.arange(cols) + 0.5) * (self.east - self.west) / cols
        return lat, lon


def bbox_of(coords, margin=0.05):
    """``(south, west, north, east)`` around the points, padded by ``margin`` of the span."""
    pts = np.asarray(list(coords), dtype=np.float64)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-3)
    lo, hi = lo - margin * span, hi + margin * span
    return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def idw_grid(deltas: dict, coords: dict, bbox=None, resolution=(100, 100), power=2.0,
             exact_radius_m=1.0, reference_time="", baseline_time="05:00") -> GeoDeltaGrid:
    """Inverse-distance-weighted surface of station deltas.

    Weights are ``1 / d**power`` with ``d`` the great-circle distance in
    meters; a cell center within ``exact_radius_m`` of a station takes that
    station's value.
    """
    sids = [s for s in deltas if s in coords]
    if not sids:
        raise EmptyInput("no stations with both a delta and coordinates")
    rows, cols = resolution
    if rows < 1 or cols < 1:
        raise ValueError("resolution must be at least 1x1")
    st = np.array([coords[s] for s in sids], dtype=np.float64)
    val = np.array([deltas[s] for s in sids], dtype=np.float64)
    if bbox is None:
        bbox = bbox_of(st)
    south, west, north, east = bbox
    grid = GeoDeltaGrid(south, west, north, east, np.zeros((rows, cols)),
                        reference_time, baseline_time)
    clat, clon = grid.cell_centers()
    cells = np.stack(np.meshgrid(clat, clon, indexing="ij"), axis=-1).reshape(-1, 2)
    d = haversine(cells[:, None, :], st[None, :, :])
    near = d <= exact_radius_m
    with np.errstate(divide="ignore"):
        w = 1.0 / np.maximum(d, exact_radius_m) ** power
    out = (w @ val) / w.sum(axis=1)
    hit = near.any(axis=1)
    if hit.any():
        out[hit] = val[np.argmin(d[hit], axis=1)]
    return GeoDeltaGrid(south, west, north, east, out.reshape(rows, cols),
                        reference_time, baseline_time)


def write_cycle_csv(cycle: DailyCycle, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_of_day", "mean", "stdev", "support"])
        for label, m, s, n in zip(cycle.time_labels(), cycle.mean, cycle.stdev, cycle.support):
            w.writerow([label, _fmt(m), _fmt(s), int(n)])


def _fmt(x):
    return "" if np.isnan(x) else f"{x:.6f}"


def grid_to_geojson(grid: GeoDeltaGrid, stations=None) -> dict:
    """FeatureCollection of cell polygons plus optional station points.

    ``stations`` maps station id to ``(lat, lon, delta)``.
    """
    feats = []
    rows, cols = grid.shape
    for r in range(rows):
        for c in range(cols):
            s, w, n, e = grid.cell_bounds(r, c)
            ring = [[w, s], [e, s], [e, n], [w, n], [w, s]]
            feats.append({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"row": r, "col": c, "delta": round(float(grid.values[r, c]), 6)},
            })
    for sid, (lat, lon, delta) in (stations or {}).items():
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [lon, lat]},
            "properties": {"station_id": sid, "delta": round(float(delta), 6)},
        })
    return {"type": "FeatureCollection",
            "properties": {"reference_time": grid.reference_time,
                           "baseline_time": grid.baseline_time},
            "features": feats}


def write_geojson(obj, path):
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")
