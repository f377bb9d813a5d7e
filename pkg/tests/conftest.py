from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from bikeflow.ingest import Snapshot, SnapshotTable, StationObservation

T0 = datetime(2008, 5, 15, 5, 0, tzinfo=timezone.utc)  # a Thursday


def obs(sid="13", bikes=7, free=12, lat=41.397, lon=2.194, name=None):
    return StationObservation(sid, name or f"station {sid}", lat, lon, bikes, free)


def snapshot(ts, counts, lat0=41.38, lon0=2.17):
    """``counts`` maps station id to ``(bikes, free)``."""
    items = []
    for sid, (b, f) in counts.items():
        k = sum(map(ord, sid)) % 97  # fixed position per station id
        items.append(obs(sid, b, f, lat0 + 0.001 * k, lon0 + 0.001 * k))
    return Snapshot(ts, tuple(items))


def daily_table(values, start=T0, step_minutes=2, free=None, station_ids=None):
    """Table with one column per station from a (days, bins, stations) array.

    Day ``d`` bin ``b`` lands at ``start + d days + b * step``.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[:, :, None]
    n_days, n_bins, n_st = values.shape
    times = []
    for d in range(n_days):
        base = np.datetime64(start.replace(tzinfo=None), "s") + np.timedelta64(d, "D")
        times.append(base + np.arange(n_bins) * np.timedelta64(step_minutes * 60, "s"))
    bikes = values.reshape(n_days * n_bins, n_st)
    if free is None:
        free = np.where(np.isnan(bikes), np.nan, 30 - np.nan_to_num(bikes))
    else:
        free = np.asarray(free, dtype=float).reshape(bikes.shape)
    ids = station_ids or [f"S{i}" for i in range(n_st)]
    return SnapshotTable(np.concatenate(times), ids, ids, 41.38 + 0.01 * np.arange(n_st),
                         2.17 + 0.01 * np.arange(n_st), bikes, np.asarray(free, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def t0():
    return T0


@pytest.fixture
def step():
    return timedelta(minutes=2)


# -- acceptance reporting ------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_runtest_logreport(report):
    # a criterion fails if any of its tests fails in setup or call
    if report.when == "teardown" or (report.when == "setup" and report.passed):
        return
    info = _criterion_of.get(report.nodeid)
    if info is None:
        return
    n, title = info
    ok, _, notes = _criteria.setdefault(n, (True, title, []))
    if not report.passed:
        notes.append(report.nodeid.split("::")[-1])
        _criteria[n] = (False, title, notes)


_criterion_of = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criterion_of[item.nodeid] = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, title, notes = _criteria[n]
        extra = f"  (failed: {', '.join(notes)})" if notes else ""
        terminalreporter.write_line(f"criterion {n} [{title}]: {'PASS' if ok else 'FAIL'}{extra}")
