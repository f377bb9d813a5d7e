"""Morning transition matrix and probable routes from aggregate counts.

Only the average stock at the start and at the end of a window is
observed. The share of bikes going from station ``i`` to station ``j``
is modelled log-linearly from three pairwise features (trip length,
dissimilarity of the two stations' morning cycles, and an inferred
departure/arrival coupling) and the three exponents are fitted so that
``P @ I`` reproduces ``F``.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import spearmanr

from .cycles import DailyCycle, station_cycles
from .errors import DimensionMismatch, InsufficientData, LengthMismatch, NonConvergence
from .geo import distance_matrix
from .preprocess import DEFAULT_CALENDAR, DayClass, ServiceWindow

EPS = 1e-3
SIGMA = 0.5
MODE_KM = 2.0
SPEED_KMH = 25.0
ROUTE_THRESHOLD = 0.03
ROLE_THRESHOLD = 3.0
COUPLING_SCORE = 0.5
MORNING = ServiceWindow(5 * 60, 12 * 60)
F3_COUPLED, F3_INVERSE, F3_OTHER = 1.0, 0.1, 0.5


class StationRole(str, enum.Enum):
    DEPARTURE = "departure"
    ARRIVAL = "arrival"
    NON_PATTERN = "non_pattern"


ROLE_COLORS = {StationRole.DEPARTURE: "blue", StationRole.ARRIVAL: "red",
               StationRole.NON_PATTERN: "black"}


@dataclass(frozen=True)
class MorningAggregate:
    station_ids: list
    I: np.ndarray
    F: np.ndarray
    window: ServiceWindow = MORNING

    def __post_init__(self):
        i = np.asarray(self.I, dtype=np.float64)
        f = np.asarray(self.F, dtype=np.float64)
        if i.shape != f.shape or i.shape != (len(self.station_ids),):
            raise DimensionMismatch("I, F and station ids must have equal length")
        if (i < 0).any() or (f < 0).any():
            raise ValueError("aggregate counts must be non-negative")
        object.__setattr__(self, "I", i)
        object.__setattr__(self, "F", f)

    def __len__(self):
        return len(self.station_ids)


@dataclass(frozen=True)
class FeatureSet:
    F1: np.ndarray  # distance
    F2: np.ndarray  # cycle dissimilarity
    F3: np.ndarray  # coupling, F3[m, k] = 1 for a coupled departure k -> arrival m
    eps: float = EPS

    def __len__(self):
        return self.F1.shape[0]


@dataclass
class TransitionModel:
    P: np.ndarray  # P[j, i]: probability of ending at j having started at i
    lam: np.ndarray
    objective: float = math.nan
    n_iter: int = 0
    n_eval: int = 0
    converged: bool = True
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class Route:
    origin: str
    dest: str
    probability: float


def f1_distance(d_m, sigma=SIGMA, mode_km=MODE_KM, eps=EPS):
    """Log-normal density of trip length in km, with its mode at ``mode_km``."""
    x = np.asarray(d_m, dtype=np.float64) / 1000.0
    mu = math.log(mode_km) + sigma ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.exp(-(np.log(x) - mu) ** 2 / (2 * sigma ** 2)) / (x * sigma * math.sqrt(2 * math.pi))
    dens = np.where(x > 0, dens, 0.0)
    out = np.maximum(dens, eps)
    return float(out) if out.ndim == 0 else out


def pearson(a, b) -> float:
    """Correlation of two vectors; 0 when either is constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.shape[0]} vs {b.shape[0]}")
    ok = ~(np.isnan(a) | np.isnan(b))
    a, b = a[ok] - a[ok].mean(), b[ok] - b[ok].mean()
    den = math.sqrt(float((a * a).sum()) * float((b * b).sum()))
    if den == 0 or a.size < 2:
        return 0.0
    return float(np.clip((a * b).sum() / den, -1.0, 1.0))


def f2_similarity(cycle_i, cycle_j, eps=EPS) -> float:
    return float(min(1.0, max((1.0 - pearson(cycle_i, cycle_j)) / 2.0, eps)))


def _mean_of(c):
    return c.mean if isinstance(c, DailyCycle) else np.asarray(c, dtype=np.float64)


def _window_bins(cycle: DailyCycle, window: ServiceWindow):
    """Bin indices of ``cycle`` inside ``[window.start, window.end]``."""
    first = max(0, (window.start - cycle.bin_start) * 60 // cycle.bin_step)
    last = min(len(cycle) - 1, (window.end - cycle.bin_start) * 60 // cycle.bin_step)
    return np.arange(first, last + 1)


def morning_aggregate(cycles: dict, window=MORNING, station_ids=None) -> MorningAggregate:
    """Average stock at the window start (I) and end (F) from station cycles."""
    ids = list(station_ids or cycles)
    i_vals, f_vals, missing = [], [], []
    for sid in ids:
        c = cycles[sid]
        a, b = c.value_at(window.start), c.value_at(window.end)
        if np.isnan(a) or np.isnan(b):
            missing.append(sid)
        i_vals.append(a)
        f_vals.append(b)
    if missing:
        raise InsufficientData(f"no data at the window edges for {missing}")
    return MorningAggregate(ids, np.array(i_vals), np.array(f_vals), window)


def classify_roles(agg: MorningAggregate, threshold=ROLE_THRESHOLD) -> list:
    out = []
    for i, f in zip(agg.I, agg.F):
        if i - f >= threshold:
            out.append(StationRole.DEPARTURE)
        elif f - i >= threshold:
            out.append(StationRole.ARRIVAL)
        else:
            out.append(StationRole.NON_PATTERN)
    return out


def coupling_scores(cycles, coords, roles, station_ids=None, speed_kmh=SPEED_KMH,
                    window=MORNING) -> dict:
    """Score every (departure, arrival) pair.

    The departure's outflow profile ``-diff(mean)`` is compared with the
    arrival's inflow profile shifted by the travel time at ``speed_kmh``.
    """
    ids = list(station_ids or cycles)
    pos = np.asarray([coords[s] for s in ids], dtype=np.float64)
    dist = distance_matrix(pos[:, 0], pos[:, 1])
    deps = [i for i, r in enumerate(roles) if r == StationRole.DEPARTURE]
    arrs = [i for i, r in enumerate(roles) if r == StationRole.ARRIVAL]
    scores = {}
    for k in deps:
        ck = cycles[ids[k]]
        bins = _window_bins(ck, window)
        out_k = -np.diff(_mean_of(ck))
        for m in arrs:
            cm = cycles[ids[m]]
            if cm.bin_step != ck.bin_step or cm.bin_start != ck.bin_start:
                raise LengthMismatch("cycles must share one grid")
            in_m = np.diff(_mean_of(cm))
            shift = int(round(dist[k, m] / (speed_kmh / 3.6) / ck.bin_step))
            t = bins[(bins < out_k.size) & (bins + shift < in_m.size)]
            scores[(ids[k], ids[m])] = pearson(out_k[t], in_m[t + shift])
    return scores


def detect_couplings(cycles, coords, roles, station_ids=None, speed_kmh=SPEED_KMH,
                     window=MORNING, min_score=COUPLING_SCORE) -> list:
    """Greedy one-to-one matching of departures to arrivals by score."""
    scores = coupling_scores(cycles, coords, roles, station_ids, speed_kmh, window)
    used_k, used_m, out = set(), set(), []
    for (k, m), s in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])):
        if s < min_score:
            break
        if k in used_k or m in used_m:
            continue
        used_k.add(k)
        used_m.add(m)
        out.append((k, m))
    return out


def f3_coupling(i, j, couplings) -> float:
    """Coupling feature for ending at ``i`` having started at ``j``."""
    pairs = set(couplings)
    if (j, i) in pairs:
        return F3_COUPLED
    if (i, j) in pairs:
        return F3_INVERSE
    return F3_OTHER


def build_features(station_ids, coords, cycles, couplings, window=MORNING, sigma=SIGMA,
                   eps=EPS) -> FeatureSet:
    ids = list(station_ids)
    n = len(ids)
    pos = np.asarray([coords[s] for s in ids], dtype=np.float64)
    f1 = f1_distance(distance_matrix(pos[:, 0], pos[:, 1]), sigma=sigma, eps=eps)
    f1 = np.atleast_2d(f1)
    np.fill_diagonal(f1, eps)
    morning = []
    for s in ids:
        c = cycles[s]
        morning.append(_mean_of(c)[_window_bins(c, window)])
    f2 = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            f2[i, j] = f2[j, i] = f2_similarity(morning[i], morning[j], eps)
    np.fill_diagonal(f2, eps)
    f3 = np.full((n, n), F3_OTHER)
    pos_of = {s: i for i, s in enumerate(ids)}
    for k, m in couplings:
        f3[pos_of[m], pos_of[k]] = F3_COUPLED
        f3[pos_of[k], pos_of[m]] = F3_INVERSE
    return FeatureSet(f1, f2, f3, eps)


def build_transition(lam, features: FeatureSet) -> TransitionModel:
    """Column-normalized product of feature powers."""
    lam = np.asarray(lam, dtype=np.float64)
    logs = (lam[0] * np.log(features.F1) + lam[1] * np.log(features.F2)
            + lam[2] * np.log(features.F3))
    logs -= logs.max(axis=0, keepdims=True)
    raw = np.exp(logs)
    return TransitionModel(raw / raw.sum(axis=0, keepdims=True), lam)


def propagate(P, I) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    I = np.asarray(I, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[1] != I.shape[0]:
        raise DimensionMismatch(f"cannot apply a {P.shape} matrix to {I.shape[0]} stations")
    return P @ I


def objective(lam, agg: MorningAggregate, features: FeatureSet) -> float:
    r = propagate(build_transition(lam, features).P, agg.I) - agg.F
    return float(r @ r)


def fit_lambda(agg: MorningAggregate, features: FeatureSet, init=(1.0, 1.0, 1.0), tol=1e-4,
               max_iter=500, seed=None, step=0.5) -> TransitionModel:
    """Nelder-Mead fit of the exponents to the observed final stock.

    Stops when the simplex is within ``tol`` in every coordinate and its
    objective values within ``tol**2``, or after ``max_iter`` iterations
    (then a :class:`NonConvergence` warning is issued and the best point
    so far is returned). ``seed`` rotates the initial simplex; ``None``
    keeps it axis-aligned.
    """
    if len(agg) < 2:
        raise InsufficientData("need at least two stations")
    if len(features) != len(agg):
        raise DimensionMismatch("features and aggregate differ in size")
    x0 = np.asarray(init, dtype=np.float64)
    steps = np.eye(3) * step
    if seed is not None:
        q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
        steps = q * step
    simplex = np.vstack([x0, x0 + steps])
    history = []

    def record(xk):
        history.append(objective(xk, agg, features))

    res = minimize(objective, x0, args=(agg, features), method="Nelder-Mead", callback=record,
                   options={"maxiter": max_iter, "xatol": tol, "fatol": tol * tol,
                            "initial_simplex": simplex})
    converged = res.nit < max_iter and res.status == 0
    if not converged:
        warnings.warn(f"simplex stopped after {res.nit} iterations without converging",
                      NonConvergence, stacklevel=2)
    model = build_transition(res.x, features)
    model.objective = float(res.fun)
    model.n_iter = int(res.nit)
    model.n_eval = int(res.nfev)
    model.converged = converged
    model.history = history
    return model


def top_routes(model, station_ids, threshold=ROUTE_THRESHOLD) -> list:
    """Off-diagonal transitions above ``threshold``, most probable first."""
    P = model.P if isinstance(model, TransitionModel) else np.asarray(model)
    j, i = np.nonzero(P > threshold)
    keep = i != j
    routes = [Route(station_ids[a], station_ids[b], float(P[b, a]))
              for a, b in zip(i[keep], j[keep])]
    routes.sort(key=lambda r: (-r.probability, r.origin, r.dest))
    return routes


def moving_average(x, window=21):
    """Centered moving average; the window shrinks at the ends."""
    x = np.asarray(x, dtype=np.float64)
    half = window // 2
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(x.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, x.size)
    return (c[hi] - c[lo]) / (hi - lo)


def rank_correlation(a, b) -> float:
    r = spearmanr(a, b).statistic
    return 0.0 if np.isnan(r) else float(r)


@dataclass
class RouteInference:
    aggregate: MorningAggregate
    cycles: dict
    coords: dict
    roles: list
    couplings: list
    features: FeatureSet
    model: TransitionModel
    routes: list

    def f_hat(self):
        return propagate(self.model.P, self.aggregate.I)

    def report(self, smooth_window=21) -> dict:
        agg = self.aggregate
        f_hat = self.f_hat()
        order = np.argsort(agg.F, kind="stable")
        return {
            "lambda": [float(v) for v in self.model.lam],
            "objective": self.model.objective,
            "iterations": self.model.n_iter,
            "evaluations": self.model.n_eval,
            "converged": self.model.converged,
            "window": str(agg.window),
            "rank_correlation": rank_correlation(agg.F, f_hat),
            "couplings": [list(p) for p in self.couplings],
            "stations": [{"station_id": s, "role": r.value, "I": float(i), "F": float(f),
                          "F_hat": float(fh)}
                         for s, r, i, f, fh in zip(agg.station_ids, self.roles, agg.I, agg.F, f_hat)],
            "ranked": {
                "smoothing_window": smooth_window,
                "station_ids": [agg.station_ids[k] for k in order],
                "actual": [float(v) for v in moving_average(agg.F[order], smooth_window)],
                "predicted": [float(v) for v in moving_average(f_hat[order], smooth_window)],
            },
        }

    def to_geojson(self) -> dict:
        feats = []
        for sid, role in zip(self.aggregate.station_ids, self.roles):
            lat, lon = self.coords[sid]
            feats.append({"type": "Feature",
                          "geometry": {"type": "Point", "coordinates": [float(lon), float(lat)]},
                          "properties": {"station_id": sid, "role": role.value,
                                         "color": ROLE_COLORS[role]}})
        for r in self.routes:
            a, b = self.coords[r.origin], self.coords[r.dest]
            feats.append({"type": "Feature",
                          "geometry": {"type": "LineString",
                                       "coordinates": [[float(a[1]), float(a[0])],
                                                       [float(b[1]), float(b[0])]]},
                          "properties": {"origin_id": r.origin, "dest_id": r.dest,
                                         "probability": r.probability}})
        return {"type": "FeatureCollection", "features": feats}


def infer_routes(snapshots, window=MORNING, day_class=DayClass.WEEKDAY, calendar=DEFAULT_CALENDAR,
                 threshold=ROUTE_THRESHOLD, role_threshold=ROLE_THRESHOLD,
                 coupling_score=COUPLING_SCORE, speed_kmh=SPEED_KMH, sigma=SIGMA, eps=EPS,
                 min_total=10, seed=None, cycles=None, coords=None) -> RouteInference:
    """Full route-inference pipeline from a snapshot store."""
    from .preprocess import _as_table

    table = _as_table(snapshots)
    if cycles is None:
        cycles = station_cycles(table, day_class, calendar, min_total=min_total)
    if coords is None:
        coords = {s: (table.lat[i], table.lon[i]) for i, s in enumerate(table.station_ids)}
    ids = [s for s in table.station_ids if s in cycles]
    agg = morning_aggregate(cycles, window, ids)
    roles = classify_roles(agg, role_threshold)
    couplings = detect_couplings(cycles, coords, roles, ids, speed_kmh, window, coupling_score)
    features = build_features(ids, coords, cycles, couplings, window, sigma, eps)
    model = fit_lambda(agg, features, seed=seed)
    routes = top_routes(model, ids, threshold)
    return RouteInference(agg, cycles, coords, roles, couplings, features, model, routes)


def write_routes_csv(inference: RouteInference, path):
    import csv

    ids = inference.aggregate.station_ids
    pos = np.asarray([inference.coords[s] for s in ids])
    dist = distance_matrix(pos[:, 0], pos[:, 1])
    at = {s: i for i, s in enumerate(ids)}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin_id", "dest_id", "probability", "distance_m"])
        for r in inference.routes:
            w.writerow([r.origin, r.dest, repr(r.probability),
                        repr(round(float(dist[at[r.origin], at[r.dest]]), 3))])


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
