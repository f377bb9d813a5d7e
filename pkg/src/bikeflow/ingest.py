"""Station-status KML parsing and the append-only snapshot store.

The store is a flat CSV file, one row per station observation::

    timestamp,station_id,name,lat,lon,bikes,free_slots
    2008-05-15T12:00:00Z,13,Pg. Lluis Companys,41.397,2.194,7,12
"""

from __future__ import annotations

import csv
import io
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateStationInSnapshot,
    MalformedDocument,
    NonMonotonicTimestamp,
    SchemaViolation,
)

log = logging.getLogger(__name__)

CSV_HEADER = ["timestamp", "station_id", "name", "lat", "lon", "bikes", "free_slots"]
TIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

_BIKES_RE = re.compile(r"\bbikes\s*=\s*(-?\d+)")
_SLOTS_RE = re.compile(r"\bslots\s*=\s*(-?\d+)")


@dataclass(frozen=True)
class StationObservation:
    station_id: str
    name: str
    lat: float
    lon: float
    bikes: int
    free_slots: int

    def __post_init__(self):
        if self.bikes < 0 or self.free_slots < 0:
            raise ValueError(f"negative count for station {self.station_id!r}")
        if not (-90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinates out of range for station {self.station_id!r}")

    @property
    def capacity(self) -> int:
        return self.bikes + self.free_slots


@dataclass(frozen=True)
class Snapshot:
    timestamp: datetime
    observations: tuple[StationObservation, ...]

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "timestamp", as_utc(self.timestamp))

    def station_ids(self):
        return [o.station_id for o in self.observations]


@dataclass(frozen=True)
class ValidationLimits:
    min_capacity: int = 15
    max_capacity: int = 39
    max_total_bikes: int = 3657

    def __post_init__(self):
        if self.min_capacity > self.max_capacity:
            raise ValueError("min_capacity must not exceed max_capacity")

    @classmethod
    def from_file(cls, path) -> ValidationLimits:
        values = {}
        for key, value in read_key_values(path).items():
            if key not in ("min_capacity", "max_capacity", "max_total_bikes"):
                raise ValueError(f"unknown limits key {key!r}")
            values[key] = int(value)
        return cls(**values)


@dataclass(frozen=True)
class SkippedPlacemark:
    index: int
    station_id: str | None
    reason: str


class ParseResult(list):
    """List of observations; ``skipped`` holds per-placemark diagnostics."""

    def __init__(self, observations=(), skipped=()):
        super().__init__(observations)
        self.skipped = list(skipped)


def as_utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return as_utc(ts).strftime(TIME_FORMAT)


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, TIME_FORMAT).replace(tzinfo=timezone.utc)


def read_key_values(path) -> dict[str, str]:
    """Read a ``key = value`` text file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


# -- KML ---------------------------------------------------------------------

def _local(tag):
    return tag.rsplit("}", 1)[-1]


def _child(elem, name):
    for c in elem:
        if _local(c.tag) == name:
            return c
    return None


def _find(elem, name):
    for c in elem.iter():
        if _local(c.tag) == name:
            return c
    return None


def parse_kml(document: str) -> ParseResult:
    """Extract one observation per ``Placemark``.

    The description must carry ``bikes=B`` and ``slots=S`` tokens in any
    order. Placemarks with missing or invalid fields are skipped and listed
    in ``result.skipped``; only an unparseable document raises.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise MalformedDocument(str(exc)) from exc

    obs, skipped = [], []
    placemarks = [e for e in root.iter() if _local(e.tag) == "Placemark"]
    for idx, pm in enumerate(placemarks):
        sid = pm.get("id")
        try:
            if not sid:
                raise ValueError("missing id attribute")
            name_el = _child(pm, "name")
            name = (name_el.text or "").strip() if name_el is not None else ""
            desc_el = _child(pm, "description")
            desc = desc_el.text or "" if desc_el is not None else ""
            mb, ms = _BIKES_RE.search(desc), _SLOTS_RE.search(desc)
            if mb is None:
                raise ValueError("description lacks bikes=")
            if ms is None:
                raise ValueError("description lacks slots=")
            coord_el = _find(pm, "coordinates")
            if coord_el is None or not (coord_el.text or "").strip():
                raise ValueError("missing coordinates")
            parts = coord_el.text.strip().split(",")
            if len(parts) < 2:
                raise ValueError(f"bad coordinates {coord_el.text.strip()!r}")
            lon, lat = float(parts[0]), float(parts[1])
            obs.append(StationObservation(sid, name, lat, lon,
                                          int(mb.group(1)), int(ms.group(1))))
        except ValueError as exc:
            skipped.append(SkippedPlacemark(idx, sid, str(exc)))
            log.warning("skipping placemark %d (%s): %s", idx, sid, exc)
    return ParseResult(obs, skipped)


def kml_timestamp(document: str) -> datetime | None:
    """Document-level ``<TimeStamp><when>`` if present."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise MalformedDocument(str(exc)) from exc
    when = _find(root, "when")
    if when is None or not (when.text or "").strip():
        return None
    return as_utc(datetime.fromisoformat(when.text.strip().replace("Z", "+00:00")))


def read_kml_file(path) -> tuple[Snapshot, list[SkippedPlacemark]]:
    """Parse one KML file into a snapshot.

    The timestamp comes from ``<TimeStamp><when>`` or, failing that, from a
    file stem like ``20080515T120000Z``.
    """
    path = Path(path)
    doc = path.read_text(encoding="utf-8")
    ts = kml_timestamp(doc)
    if ts is None:
        try:
            ts = datetime.strptime(path.stem, "%Y%m%dT%H%M%SZ").replace(tzinfo=timezone.utc)
        except ValueError:
            raise MalformedDocument(f"{path.name}: no <when> element and stem is not a timestamp")
    result = parse_kml(doc)
    return Snapshot(ts, tuple(result)), result.skipped


def write_kml(observations, timestamp: datetime | None = None) -> str:
    """Render observations in the fixture KML schema."""
    from xml.sax.saxutils import escape, quoteattr

    lines = ["<kml><Document>"]
    if timestamp is not None:
        lines.append(f"<TimeStamp><when>{format_timestamp(timestamp)}</when></TimeStamp>")
    for o in observations:
        lines.append(
            f"<Placemark id={quoteattr(o.station_id)}><name>{escape(o.name)}</name>"
            f"<description>bikes={o.bikes}|slots={o.free_slots}</description>"
            f"<Point><coordinates>{o.lon!r},{o.lat!r}</coordinates></Point></Placemark>"
        )
    lines.append("</Document></kml>")
    return "\n".join(lines) + "\n"


# -- snapshot store ------------------------------------------------------------

def _row(ts_text, o):
    return [ts_text, o.station_id, o.name, repr(float(o.lat)), repr(float(o.lon)),
            str(o.bikes), str(o.free_slots)]


def serialize_snapshots(snapshots, header=True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    for snap in snapshots:
        ts = format_timestamp(snap.timestamp)
        for o in snap.observations:
            w.writerow(_row(ts, o))
    return buf.getvalue()


@dataclass
class StationInfo:
    station_id: str
    name: str
    lat: float
    lon: float


@dataclass
class SnapshotStore:
    """Append-only CSV store plus the registry of stations seen so far."""

    path: Path
    registry: dict[str, StationInfo] = field(default_factory=dict)
    last_timestamp: datetime | None = None
    n_rows: int = 0
    n_snapshots: int = 0

    @classmethod
    def open(cls, path) -> SnapshotStore:
        path = Path(path)
        store = cls(path)
        if path.exists() and path.stat().st_size > 0:
            for snap in load_snapshots(path):
                store._register(snap)
                store.last_timestamp = snap.timestamp
                store.n_rows += len(snap.observations)
                store.n_snapshots += 1
        return store

    def _register(self, snap):
        new = []
        for o in snap.observations:
            info = self.registry.get(o.station_id)
            if info is None:
                self.registry[o.station_id] = StationInfo(o.station_id, o.name, o.lat, o.lon)
                new.append(o.station_id)
            elif (info.lat, info.lon) != (o.lat, o.lon):
                log.warning("station %s moved from (%s, %s) to (%s, %s)",
                            o.station_id, info.lat, info.lon, o.lat, o.lon)
                info.lat, info.lon = o.lat, o.lon
                info.name = o.name
        return new


def append_snapshot(store: SnapshotStore, snapshot: Snapshot) -> SnapshotStore:
    """Register unseen stations, then append the snapshot's rows."""
    ids = snapshot.station_ids()
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise DuplicateStationInSnapshot(f"duplicate station ids {dup} at {snapshot.timestamp}")
    if store.last_timestamp is not None and snapshot.timestamp <= store.last_timestamp:
        raise NonMonotonicTimestamp(
            f"{format_timestamp(snapshot.timestamp)} is not after "
            f"{format_timestamp(store.last_timestamp)}")
    new = store._register(snapshot)
    if new:
        log.info("registered %d new station(s)", len(new))
    fresh = not store.path.exists() or store.path.stat().st_size == 0
    with open(store.path, "a", encoding="utf-8", newline="") as fh:
        fh.write(serialize_snapshots([snapshot], header=fresh))
    store.last_timestamp = snapshot.timestamp
    store.n_rows += len(snapshot.observations)
    store.n_snapshots += 1
    return store


def load_snapshots(path, time_range=None) -> list[Snapshot]:
    """Read the store, returning snapshots in ``[start, end)`` sorted by time."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    start = end = None
    if time_range is not None:
        start, end = (as_utc(t) if t is not None else None for t in time_range)

    groups: dict[datetime, list[StationObservation]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if header != CSV_HEADER:
            raise SchemaViolation(f"bad header {header}", line=1)
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise SchemaViolation(f"expected {len(CSV_HEADER)} fields, got {len(row)}", line=lineno)
            try:
                ts = parse_timestamp(row[0])
                o = StationObservation(row[1], row[2], float(row[3]), float(row[4]),
                                       int(row[5]), int(row[6]))
            except ValueError as exc:
                raise SchemaViolation(str(exc), line=lineno) from exc
            if start is not None and ts < start:
                continue
            if end is not None and ts >= end:
                continue
            groups.setdefault(ts, []).append(o)
    return [Snapshot(ts, tuple(groups[ts])) for ts in sorted(groups)]


# -- validation -----------------------------------------------------------------

@dataclass(frozen=True)
class ValidationWarning:
    kind: str  # "capacity" | "total_bikes" | "zero_capacity"
    station_id: str | None
    message: str


def validate_snapshot(snapshot: Snapshot, limits: ValidationLimits = ValidationLimits()):
    """Warnings for readings outside physical limits. Never raises."""
    report = []
    for o in snapshot.observations:
        cap = o.capacity
        if cap == 0:
            report.append(ValidationWarning("zero_capacity", o.station_id,
                                            f"station {o.station_id} reports zero capacity"))
        elif not limits.min_capacity <= cap <= limits.max_capacity:
            report.append(ValidationWarning(
                "capacity", o.station_id,
                f"station {o.station_id} capacity {cap} outside "
                f"[{limits.min_capacity}, {limits.max_capacity}]"))
    total = sum(o.bikes for o in snapshot.observations)
    if total > limits.max_total_bikes:
        report.append(ValidationWarning(
            "total_bikes", None, f"total bikes {total} exceeds {limits.max_total_bikes}"))
    return report


# -- dense view -------------------------------------------------------------------

class SnapshotTable:
    """Dense (time x station) view of a snapshot list.

    ``bikes`` and ``free_slots`` are float arrays with NaN where a station
    did not report. Columns follow first appearance order.
    """

    def __init__(self, times, station_ids, names, lat, lon, bikes, free_slots):
        self.times = np.asarray(times, dtype="datetime64[s]")
        self.station_ids = list(station_ids)
        self.names = list(names)
        self.lat = np.asarray(lat, dtype=np.float64)
        self.lon = np.asarray(lon, dtype=np.float64)
        self.bikes = np.asarray(bikes, dtype=np.float64)
        self.free_slots = np.asarray(free_slots, dtype=np.float64)
        self._index = {s: i for i, s in enumerate(self.station_ids)}

    @classmethod
    def from_snapshots(cls, snapshots) -> SnapshotTable:
        index, names, lat, lon = {}, [], [], []
        for snap in snapshots:
            for o in snap.observations:
                i = index.get(o.station_id)
                if i is None:
                    index[o.station_id] = len(names)
                    names.append(o.name)
                    lat.append(o.lat)
                    lon.append(o.lon)
                else:
                    lat[i], lon[i], names[i] = o.lat, o.lon, o.name
        bikes = np.full((len(snapshots), len(index)), np.nan)
        free = np.full_like(bikes, np.nan)
        for t, snap in enumerate(snapshots):
            for o in snap.observations:
                i = index[o.station_id]
                bikes[t, i] = o.bikes
                free[t, i] = o.free_slots
        times = [np.datetime64(s.timestamp.replace(tzinfo=None), "s") for s in snapshots]
        return cls(times, list(index), names, lat, lon, bikes, free)

    @classmethod
    def load(cls, path, time_range=None) -> SnapshotTable:
        """Read the store straight into arrays.

        Same checks and result as ``from_snapshots(load_snapshots(...))``,
        without building one object per row.
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(str(path))
        cols = ([], [], [], [], [], [], [])
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is not None and header != CSV_HEADER:
                raise SchemaViolation(f"bad header {header}", line=1)
            seen_ts = set()
            for row in reader:
                if not row:
                    continue
                lineno = reader.line_num
                if len(row) != len(CSV_HEADER):
                    raise SchemaViolation(f"expected {len(CSV_HEADER)} fields, got {len(row)}",
                                          line=lineno)
                ts, sid, name, lat, lon, bikes, free = row
                try:
                    if ts not in seen_ts:
                        parse_timestamp(ts)
                        seen_ts.add(ts)
                    lat, lon, bikes, free = float(lat), float(lon), int(bikes), int(free)
                except ValueError as exc:
                    raise SchemaViolation(str(exc), line=lineno) from exc
                if bikes < 0 or free < 0:
                    raise SchemaViolation(f"negative count for station {sid!r}", line=lineno)
                if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                    raise SchemaViolation(f"coordinates out of range for station {sid!r}",
                                          line=lineno)
                for c, v in zip(cols, (ts, sid, name, lat, lon, bikes, free)):
                    c.append(v)
        ts, sid, name, lat, lon, bikes, free = cols
        times = np.array([t[:-1] for t in ts], dtype="datetime64[s]")
        keep = np.ones(times.shape, dtype=bool)
        if time_range is not None:
            start, end = time_range
            if start is not None:
                keep &= times >= np.datetime64(as_utc(start).replace(tzinfo=None), "s")
            if end is not None:
                keep &= times < np.datetime64(as_utc(end).replace(tzinfo=None), "s")
        rows = np.flatnonzero(keep)
        rows = rows[np.argsort(times[rows], kind="stable")]
        uniq, t_idx = np.unique(times[rows], return_inverse=True)
        index, names, lats, lons = {}, [], [], []
        col = np.empty(rows.size, dtype=np.int64)
        for k, r in enumerate(rows):
            i = index.get(sid[r])
            if i is None:
                i = index[sid[r]] = len(names)
                names.append(name[r])
                lats.append(lat[r])
                lons.append(lon[r])
            else:
                names[i], lats[i], lons[i] = name[r], lat[r], lon[r]
            col[k] = i
        b = np.full((uniq.size, len(index)), np.nan)
        f = np.full_like(b, np.nan)
        b[t_idx, col] = np.asarray(bikes, dtype=np.float64)[rows]
        f[t_idx, col] = np.asarray(free, dtype=np.float64)[rows]
        return cls(uniq, list(index), names, lats, lons, b, f)

    def to_snapshots(self) -> list[Snapshot]:
        out = []
        for t in range(len(self.times)):
            ts = self.times[t].astype(datetime).replace(tzinfo=timezone.utc)
            obs = []
            for i, sid in enumerate(self.station_ids):
                b, f = self.bikes[t, i], self.free_slots[t, i]
                if np.isnan(b) or np.isnan(f):
                    continue
                obs.append(StationObservation(sid, self.names[i], float(self.lat[i]),
                                              float(self.lon[i]), int(b), int(f)))
            out.append(Snapshot(ts, tuple(obs)))
        return out

    def write_csv(self, path):
        """Write in store format; byte-identical to serializing ``to_snapshots()``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="")
        prefix = []
        for i, sid in enumerate(self.station_ids):
            buf.seek(0)
            buf.truncate()
            w.writerow([sid, self.names[i], repr(float(self.lat[i])), repr(float(self.lon[i]))])
            prefix.append(buf.getvalue())
        stamps = np.datetime_as_string(self.times, unit="s")
        present = ~(np.isnan(self.bikes) | np.isnan(self.free_slots))
        lines = [",".join(CSV_HEADER)]
        for t in range(len(self.times)):
            ts = stamps[t] + "Z"
            for i in np.flatnonzero(present[t]):
                lines.append(f"{ts},{prefix[i]},{int(self.bikes[t, i])},{int(self.free_slots[t, i])}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def column(self, station_id) -> int:
        return self._index[station_id]

    @property
    def total_slots(self):
        return self.bikes + self.free_slots

    def __len__(self):
        return len(self.times)
