"""Synthetic bike-share networks with a known trip process.

A network is a set of stations with coordinates, capacities and an
activity archetype. An :class:`ODSchedule` gives Poisson trip rates per
ordered station pair and time-of-day bin; :func:`simulate` replays those
trips day by day and emits 2-minute snapshots plus the log of completed
trips, which is the ground truth the inference modules are checked
against.

Each simulated day starts from the network's 05:00 stock (the overnight
state is not modelled) and runs until 24:00.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import InvalidSpec
from .geo import distance_matrix
from .ingest import SnapshotTable
from .preprocess import DEFAULT_CALENDAR, DayClass, ServiceWindow, classify_day

SPEED_KMH = 25.0
RETRY_DELAY_S = 600.0
DEFAULT_BBOX = (41.36, 2.12, 41.42, 2.20)  # south, west, north, east


class Archetype(str, enum.Enum):
    RESIDENTIAL = "residential"
    OFFICE = "office"
    UNIVERSITY = "university"
    BEACH = "beach"
    LEISURE = "leisure"


# Fraction of capacity occupied, as (hour, fraction) knots; linear in between.
WEEKDAY_TEMPLATES = {
    Archetype.RESIDENTIAL: [(5, .85), (7, .80), (9.5, .20), (13, .25), (15, .40),
                            (17, .35), (20, .70), (24, .85)],
    Archetype.OFFICE: [(5, .15), (7.5, .20), (9.5, .85), (13.5, .80), (14.5, .60),
                       (16, .75), (19.5, .20), (24, .15)],
    Archetype.UNIVERSITY: [(5, .15), (8, .20), (10, .90), (13, .85), (15, .40),
                           (17, .30), (24, .15)],
    Archetype.BEACH: [(5, .50), (10, .45), (13, .80), (18, .85), (21, .50), (24, .50)],
    Archetype.LEISURE: [(5, .40), (18, .35), (21, .80), (23.5, .60), (24, .40)],
}
WEEKEND_TEMPLATES = {
    Archetype.RESIDENTIAL: [(5, .85), (10, .85), (13, .55), (16, .65), (19, .45), (24, .85)],
    Archetype.OFFICE: [(5, .15), (24, .15)],
    Archetype.UNIVERSITY: [(5, .15), (12, .35), (17, .30), (24, .15)],
    Archetype.BEACH: [(5, .50), (11, .50), (14, .90), (19, .85), (22, .50), (24, .50)],
    Archetype.LEISURE: [(5, .40), (12, .50), (15, .40), (21, .85), (24, .40)],
}
INITIAL_FILL = {a: t[0][1] for a, t in WEEKDAY_TEMPLATES.items()}


@dataclass(frozen=True)
class NetworkSpec:
    n_stations: int = 20
    seed: int = 0
    capacity_range: tuple = (15, 39)
    bbox: tuple = DEFAULT_BBOX
    archetypes: tuple | None = None  # explicit per-station list
    archetype_weights: dict | None = None


@dataclass
class Network:
    station_ids: list
    names: list
    lat: np.ndarray
    lon: np.ndarray
    capacity: np.ndarray
    archetype: list
    initial_stock: np.ndarray

    def __len__(self):
        return len(self.station_ids)

    @property
    def coords(self):
        return np.column_stack([self.lat, self.lon])

    def distances(self):
        return distance_matrix(self.lat, self.lon)


def generate_network(spec: NetworkSpec) -> Network:
    """Place stations uniformly in the bounding box and fill them per archetype."""
    n = spec.n_stations
    lo, hi = spec.capacity_range
    if n < 1:
        raise InvalidSpec("need at least one station")
    if not 1 <= lo <= hi:
        raise InvalidSpec(f"bad capacity range {spec.capacity_range}")
    south, west, north, east = spec.bbox
    if not (south < north and west < east):
        raise InvalidSpec(f"bad bounding box {spec.bbox}")
    rng = np.random.default_rng(spec.seed)
    lat = rng.uniform(south, north, n)
    lon = rng.uniform(west, east, n)
    cap = rng.integers(lo, hi + 1, n)
    if spec.archetypes is not None:
        if len(spec.archetypes) != n:
            raise InvalidSpec("archetype list length differs from n_stations")
        arch = [Archetype(a) for a in spec.archetypes]
    else:
        kinds = list(Archetype)
        w = spec.archetype_weights or {}
        p = np.array([float(w.get(k, w.get(k.value, 1.0))) for k in kinds])
        if (p < 0).any() or p.sum() <= 0:
            raise InvalidSpec("archetype weights must be non-negative and not all zero")
        arch = [kinds[i] for i in rng.choice(len(kinds), size=n, p=p / p.sum())]
    stock = np.array([round(INITIAL_FILL[a] * c) for a, c in zip(arch, cap)], dtype=np.int64)
    ids = [f"S{i + 1:03d}" for i in range(n)]
    names = [f"Station {i + 1} ({a.value})" for i, a in enumerate(arch)]
    return Network(ids, names, lat, lon, cap.astype(np.int64), arch, stock)


@dataclass
class ODSchedule:
    """Trip rates (per hour) for each ordered pair and time-of-day bin.

    ``edges`` are bin boundaries in minutes after midnight; ``weekday`` and
    ``weekend`` have shape ``(n_bins, n_stations, n_stations)`` indexed
    ``[bin, origin, dest]``.
    """

    station_ids: list
    edges: np.ndarray
    weekday: np.ndarray
    weekend: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64)
        self.weekday = np.asarray(self.weekday, dtype=np.float64)
        self.weekend = np.asarray(self.weekend, dtype=np.float64)
        shape = (len(self.edges) - 1, len(self.station_ids), len(self.station_ids))
        if self.weekday.shape != shape or self.weekend.shape != shape:
            raise InvalidSpec(f"rate arrays must have shape {shape}")
        if (self.weekday < 0).any() or (self.weekend < 0).any():
            raise InvalidSpec("rates must be non-negative")

    @classmethod
    def zeros(cls, station_ids, edges=None) -> ODSchedule:
        edges = np.arange(5 * 60, 24 * 60 + 1, 60) if edges is None else np.asarray(edges)
        shape = (len(edges) - 1, len(station_ids), len(station_ids))
        return cls(list(station_ids), edges, np.zeros(shape), np.zeros(shape))

    def rates(self, day_class: DayClass):
        return self.weekday if DayClass(day_class) == DayClass.WEEKDAY else self.weekend

    def add(self, day_class, start_min, end_min, origin, dest, rate):
        """Add ``rate`` trips/hour from ``origin`` to ``dest`` over bins inside the span."""
        o = self.station_ids.index(origin) if isinstance(origin, str) else origin
        d = self.station_ids.index(dest) if isinstance(dest, str) else dest
        if rate < 0:
            raise InvalidSpec(f"rate must be non-negative, got {rate}")
        sel = (self.edges[:-1] >= start_min) & (self.edges[1:] <= end_min)
        self.rates(day_class)[sel, o, d] += rate

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["day_class", "start", "end", "origin_id", "dest_id", "rate_per_hour"])
            for cls in (DayClass.WEEKDAY, DayClass.WEEKEND):
                r = self.rates(cls)
                for b, o, d in zip(*np.nonzero(r)):
                    w.writerow([cls.value, _hm(self.edges[b]), _hm(self.edges[b + 1]),
                                self.station_ids[o], self.station_ids[d], repr(float(r[b, o, d]))])

    @classmethod
    def from_csv(cls, path, station_ids) -> ODSchedule:
        rows = []
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append(row)
        edges = sorted({_min(r["start"]) for r in rows} | {_min(r["end"]) for r in rows})
        if not edges:
            edges = [5 * 60, 24 * 60]
        sched = cls.zeros(station_ids, edges)
        for r in rows:
            for sid in (r["origin_id"], r["dest_id"]):
                if sid not in sched.station_ids:
                    raise InvalidSpec(f"schedule names unknown station {sid!r}")
            sched.add(r["day_class"], _min(r["start"]), _min(r["end"]),
                      r["origin_id"], r["dest_id"], float(r["rate_per_hour"]))
        return sched


def _hm(minutes):
    return f"{int(minutes) // 60:02d}:{int(minutes) % 60:02d}"


def _min(text):
    h, m = text.split(":")
    return int(h) * 60 + int(m)


def _template_value(knots, hour):
    hs, fs = zip(*knots)
    return np.interp(hour, hs, fs)


def distance_preference(dist_m, mode_km=2.0, sigma=0.5):
    """Log-normal shaped weight on trip length, peaking at ``mode_km``."""
    d = np.maximum(np.asarray(dist_m, dtype=np.float64) / 1000.0, 1e-3)
    mu = np.log(mode_km) + sigma ** 2
    return np.exp(-(np.log(d) - mu) ** 2 / (2 * sigma ** 2)) / d


def archetype_schedule(network: Network, intensity=1.0, churn=0.6, edges=None) -> ODSchedule:
    """Derive OD rates that push every station along its archetype template.

    In each bin, stations whose template falls release bikes towards
    stations whose template rises, split by a trip-length preference.
    ``churn`` adds balanced background trips (per station and hour).
    """
    sched = ODSchedule.zeros(network.station_ids, edges)
    e = sched.edges
    n = len(network)
    pref = distance_preference(network.distances())
    np.fill_diagonal(pref, 0.0)
    cap = network.capacity.astype(np.float64)
    for cls, templates in ((DayClass.WEEKDAY, WEEKDAY_TEMPLATES),
                           (DayClass.WEEKEND, WEEKEND_TEMPLATES)):
        rates = sched.rates(cls)
        for b in range(len(e) - 1):
            h0, h1 = e[b] / 60.0, e[b + 1] / 60.0
            delta = np.array([cap[i] * (_template_value(templates[network.archetype[i]], h1)
                                        - _template_value(templates[network.archetype[i]], h0))
                              for i in range(n)])
            out = np.maximum(-delta, 0.0)
            inn = np.maximum(delta, 0.0)
            flow = min(out.sum(), inn.sum())
            if flow > 0:
                out *= flow / out.sum()
                inn *= flow / inn.sum()
                w = pref * inn[None, :]
                wsum = w.sum(axis=1, keepdims=True)
                share = np.divide(w, wsum, out=np.zeros_like(w), where=wsum > 0)
                rates[b] += intensity * out[:, None] * share / (h1 - h0)
            if churn > 0 and n > 1:
                bg = pref / np.maximum(pref.sum(axis=1, keepdims=True), 1e-12)
                rates[b] += churn * 0.5 * (bg + bg.T)
    return sched


@dataclass(frozen=True)
class NoiseSpec:
    """Observation and operations noise.

    ``dropout_prob``: chance per station and day that the reported slot
    count collapses below 10 for ``dropout_minutes``. ``trucks_per_day``:
    mean number of rebalancing moves of ``truck_bikes`` bikes from the
    fullest to the emptiest station. ``rate_jitter``: log-normal sd of a
    per-day multiplier on all trip rates.
    """

    dropout_prob: float = 0.0
    dropout_minutes: int = 20
    trucks_per_day: float = 0.0
    truck_bikes: int = 8
    rate_jitter: float = 0.0

    @classmethod
    def from_level(cls, level: float, n_stations: int = 20) -> NoiseSpec:
        return cls(dropout_prob=level, trucks_per_day=level * n_stations / 4,
                   rate_jitter=level)

    @property
    def silent(self):
        return self.dropout_prob == 0 and self.trucks_per_day == 0 and self.rate_jitter == 0


@dataclass
class TripLog:
    station_ids: list
    origin: np.ndarray  # station index
    dest: np.ndarray
    depart: np.ndarray  # datetime64[s]
    arrive: np.ndarray

    def __len__(self):
        return self.origin.shape[0]

    @classmethod
    def empty(cls, station_ids) -> TripLog:
        z = np.zeros(0, dtype=np.int64)
        t = np.zeros(0, dtype="datetime64[s]")
        return cls(list(station_ids), z, z.copy(), t, t.copy())

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["origin_id", "dest_id", "depart", "arrive"])
            for o, d, a, b in zip(self.origin, self.dest, self.depart, self.arrive):
                w.writerow([self.station_ids[o], self.station_ids[d],
                            f"{a}Z", f"{b}Z"])

    @classmethod
    def from_csv(cls, path, station_ids=None) -> TripLog:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        ids = list(station_ids) if station_ids is not None else sorted(
            {r["origin_id"] for r in rows} | {r["dest_id"] for r in rows})
        pos = {s: i for i, s in enumerate(ids)}
        return cls(ids,
                   np.array([pos[r["origin_id"]] for r in rows], dtype=np.int64),
                   np.array([pos[r["dest_id"]] for r in rows], dtype=np.int64),
                   np.array([r["depart"].rstrip("Z") for r in rows], dtype="datetime64[s]"),
                   np.array([r["arrive"].rstrip("Z") for r in rows], dtype="datetime64[s]"))


@dataclass
class SimulationResult:
    table: SnapshotTable
    trips: TripLog
    in_transit: np.ndarray  # bikes on the road at each snapshot
    true_bikes: np.ndarray  # noise-free station counts, (T, S)
    day_stock: dict = field(default_factory=dict)  # date -> stock at 05:00
    refused: int = 0
    rerouted: int = 0

    def snapshots(self):
        return self.table.to_snapshots()


def simulate(network: Network, schedule: ODSchedule, days: int, noise: NoiseSpec = NoiseSpec(),
             seed: int = 0, start: date = date(2008, 5, 19), step_minutes: int = 2,
             calendar=DEFAULT_CALENDAR, window: ServiceWindow = ServiceWindow()) -> SimulationResult:
    """Run the trip process for ``days`` consecutive days."""
    if days < 1:
        raise InvalidSpec("days must be >= 1")
    if list(schedule.station_ids) != list(network.station_ids):
        raise InvalidSpec("schedule and network station ids differ")
    rng = np.random.default_rng(seed)
    n = len(network)
    cap = network.capacity.astype(np.int64)
    travel = network.distances() / (SPEED_KMH / 3.6)
    step_s = step_minutes * 60
    snap_sec = np.arange(window.start * 60, window.end * 60, step_s, dtype=np.float64)
    edges_s = schedule.edges * 60.0

    times, bikes_all, free_all, true_all, transit_all = [], [], [], [], []
    trip_parts = []
    day_stock = {}
    refused = rerouted = 0
    for k in range(days):
        day = start + timedelta(days=k)
        rates = schedule.rates(classify_day(day, calendar))
        mult = float(np.exp(rng.normal(0.0, noise.rate_jitter))) if noise.rate_jitter else 1.0

        req_t, req_o, req_d = [], [], []
        for b in range(rates.shape[0]):
            hours = (edges_s[b + 1] - edges_s[b]) / 3600.0
            counts = rng.poisson(rates[b] * hours * mult)
            o, d = np.nonzero(counts)
            c = counts[o, d]
            if c.size == 0:
                continue
            req_o.append(np.repeat(o, c))
            req_d.append(np.repeat(d, c))
            req_t.append(rng.uniform(edges_s[b], edges_s[b + 1], int(c.sum())))
        if req_t:
            req_t = np.concatenate(req_t)
            order = np.argsort(req_t, kind="stable")
            req_t = req_t[order]
            req_o = np.concatenate(req_o)[order]
            req_d = np.concatenate(req_d)[order]
        else:
            req_t = np.zeros(0)
            req_o = req_d = np.zeros(0, dtype=np.int64)

        n_trucks = rng.poisson(noise.trucks_per_day) if noise.trucks_per_day else 0
        truck_t = np.sort(rng.uniform(snap_sec[0], snap_sec[-1], n_trucks))
        truck_b = np.full(n_trucks, noise.truck_bikes, dtype=np.int64)

        stock0 = network.initial_stock.astype(np.int64)
        day_stock[day] = stock0.copy()
        snap, transit, trips, _, n_ref, n_rer = _kernels.run_day(
            stock0, cap, travel, req_t, req_o, req_d, truck_t, truck_b, snap_sec,
            RETRY_DELAY_S)
        refused += n_ref
        rerouted += n_rer

        rep_b = snap.astype(np.float64)
        rep_total = np.broadcast_to(cap, snap.shape).astype(np.float64).copy()
        if noise.dropout_prob:
            hit = rng.random(n) < noise.dropout_prob
            width = max(1, noise.dropout_minutes * 60 // step_s)
            for s in np.flatnonzero(hit):
                t0 = int(rng.integers(0, max(1, len(snap_sec) - width)))
                level = rng.integers(0, 10, width)
                rep_total[t0:t0 + width, s] = level
                rep_b[t0:t0 + width, s] = np.minimum(rep_b[t0:t0 + width, s], level)

        midnight = np.datetime64(day.isoformat(), "s")
        times.append(midnight + snap_sec.astype(np.int64).astype("timedelta64[s]"))
        bikes_all.append(rep_b)
        free_all.append(rep_total - rep_b)
        true_all.append(snap)
        transit_all.append(transit)
        if len(trips):
            trip_parts.append((trips[:, 0].astype(np.int64), trips[:, 1].astype(np.int64),
                               midnight + np.floor(trips[:, 2]).astype(np.int64).astype("timedelta64[s]"),
                               midnight + np.floor(trips[:, 3]).astype(np.int64).astype("timedelta64[s]")))

    table = SnapshotTable(np.concatenate(times), network.station_ids, network.names,
                          network.lat, network.lon, np.vstack(bikes_all), np.vstack(free_all))
    if trip_parts:
        log = TripLog(network.station_ids, *(np.concatenate(p) for p in zip(*trip_parts)))
    else:
        log = TripLog.empty(network.station_ids)
    return SimulationResult(table, log, np.concatenate(transit_all), np.vstack(true_all),
                            day_stock, refused, rerouted)


def ground_truth_transition(log: TripLog, window=(5 * 60, 12 * 60), initial=None):
    """Empirical transition matrix of trips departing inside ``window``.

    ``initial`` gives the bikes at each station when the window opens:
    either a mapping ``date -> vector`` (one entry per simulated day) or a
    single vector for a one-day log. Bikes that did not depart count as
    staying. Returns ``(P, I, F)`` with ``P[j, i]`` the share of station
    ``i``'s bikes that ended at ``j``, ``I`` the mean initial stock per
    day and ``F = P @ I``.
    """
    n = len(log.station_ids)
    if initial is None:
        raise ValueError("initial stock is required")
    if isinstance(initial, dict):
        days = sorted(initial)
        stock = np.array([initial[d] for d in days], dtype=np.float64).reshape(len(days), n)
    else:
        stock = np.asarray(initial, dtype=np.float64).reshape(1, n)
    start, end = window
    dep = log.depart
    minute = ((dep - dep.astype("datetime64[D]")) // np.timedelta64(60, "s")).astype(np.int64)
    sel = (minute >= start) & (minute < end)
    if isinstance(initial, dict):
        dd = dep.astype("datetime64[D]").astype(object)
        sel &= np.array([d in initial for d in dd], dtype=bool)
    counts = np.zeros((n, n))
    np.add.at(counts, (log.dest[sel], log.origin[sel]), 1.0)
    total0 = stock.sum(axis=0)
    out = counts.sum(axis=0)
    stay = np.maximum(total0 - out, 0.0)
    denom = np.maximum(total0, out)
    p = counts + np.diag(stay)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(denom > 0, p / np.where(denom > 0, denom, 1.0), 0.0)
    empty = denom == 0
    p[:, empty] = 0.0
    p[empty, empty] = 1.0
    i_mean = stock.mean(axis=0)
    return p, i_mean, p @ i_mean


def planted_coupling_scenario(n_stations=12, n_pairs=4, seed=0, share=0.75,
                              peak_rate=22.0, pair_distance_m=2000.0, neutral_commute=4.0):
    """Network with ``n_pairs`` departure stations each feeding one arrival station.

    Every departure station has its own one-hour morning peak (staggered
    by 45 minutes) during which ``share`` of its trips go to its partner
    and the rest spread over the neutral stations. Neutral stations
    exchange balanced background trips and send ``neutral_commute`` bikes
    each over the morning to the arrival stations, so they stay roughly
    level. Returns ``(network, schedule, pairs)`` with pairs as
    ``(departure_id, arrival_id)``.
    """
    if n_stations < 2 * n_pairs + 1:
        raise InvalidSpec("need room for the pairs plus at least one neutral station")
    rng = np.random.default_rng(seed)
    south, west, north, east = DEFAULT_BBOX
    clat, clon = (south + north) / 2, (west + east) / 2
    m_lat = 111_195.0
    m_lon = m_lat * np.cos(np.radians(clat))
    lat, lon = [], []
    ring = np.linspace(0, 2 * np.pi, n_pairs, endpoint=False) + rng.uniform(0, 0.3)
    for a in ring:
        # departure on an outer ring, its partner pair_distance_m towards the center
        r_out = 3200.0 + rng.uniform(-200, 200)
        for r in (r_out, r_out - pair_distance_m):
            lat.append(clat + r * np.sin(a) / m_lat)
            lon.append(clon + r * np.cos(a) / m_lon)
    n_neutral = n_stations - 2 * n_pairs
    for a in np.linspace(0, 2 * np.pi, n_neutral, endpoint=False) + np.pi / n_pairs:
        r = 1800.0 + rng.uniform(-300, 300)
        lat.append(clat + r * np.sin(a) / m_lat)
        lon.append(clon + r * np.cos(a) / m_lon)
    cap = np.full(n_stations, 30, dtype=np.int64)
    arch, stock = [], []
    for _ in range(n_pairs):
        arch += [Archetype.RESIDENTIAL, Archetype.OFFICE]
        stock += [26, 3]
    arch += [Archetype.LEISURE] * n_neutral
    stock += [15] * n_neutral
    ids = [f"S{i + 1:03d}" for i in range(n_stations)]
    names = [f"Station {i + 1} ({a.value})" for i, a in enumerate(arch)]
    net = Network(ids, names, np.array(lat), np.array(lon), cap, arch,
                  np.array(stock, dtype=np.int64))

    sched = ODSchedule.zeros(ids, np.arange(5 * 60, 24 * 60 + 1, 15))
    neutral = list(range(2 * n_pairs, n_stations))
    arrivals = [2 * p + 1 for p in range(n_pairs)]
    pairs = []
    for cls, scale in ((DayClass.WEEKDAY, 1.0), (DayClass.WEEKEND, 0.2)):
        for p in range(n_pairs):
            k, m = 2 * p, 2 * p + 1
            t0 = 6 * 60 + 30 + 45 * p
            sched.add(cls, t0, t0 + 60, k, m, scale * peak_rate * share)
            for j in neutral:
                sched.add(cls, t0, t0 + 60, k, j, scale * peak_rate * (1 - share) / len(neutral))
            # evening return flow
            sched.add(cls, 17 * 60 + 30 * p, 18 * 60 + 30 * p, m, k, scale * peak_rate * share)
        for i in neutral:
            for m in arrivals:
                sched.add(cls, 7 * 60, 11 * 60, i, m, scale * neutral_commute / 4 / len(arrivals))
            for j in neutral:
                if i != j:
                    sched.add(cls, 5 * 60, 24 * 60, i, j, 0.3)
    pairs = [(ids[2 * p], ids[2 * p + 1]) for p in range(n_pairs)]
    return net, sched, pairs


def commuter_scenario(n_stations=20, seed=0):
    """Archetype network with pronounced weekday cycles."""
    kinds = [Archetype.RESIDENTIAL, Archetype.OFFICE, Archetype.UNIVERSITY,
             Archetype.RESIDENTIAL, Archetype.BEACH, Archetype.LEISURE]
    arch = tuple(kinds[i % len(kinds)] for i in range(n_stations))
    net = generate_network(NetworkSpec(n_stations=n_stations, seed=seed, archetypes=arch))
    return net, archetype_schedule(net)


def utc(d: date) -> datetime:
    return datetime(d.year, d.month, d.day, tzinfo=timezone.utc)


def write_outputs(result: SimulationResult, store_path=None, trips_path=None):
    if store_path is not None:
        result.table.write_csv(store_path)
    if trips_path is not None:
        result.trips.to_csv(trips_path)
    return [p for p in (store_path, trips_path) if p is not None]


__all__ = [
    "Archetype", "NetworkSpec", "Network", "ODSchedule", "NoiseSpec", "TripLog",
    "SimulationResult", "generate_network", "archetype_schedule", "simulate",
    "ground_truth_transition", "planted_coupling_scenario", "commuter_scenario",
    "Path",
]
