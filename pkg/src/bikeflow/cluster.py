"""Two-stage station clustering.

Stage 1 groups stations by absolute similarity of their weekday cycles
(k-medians under the L1 distance). Stage 2 groups the stage-1 centroids by
the agreement of their gradient signs (k-means with Hamming distance and
majority-vote centroids), which ignores station size.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import KTooLarge, LengthMismatch, MetaKTooLarge, RangeEmpty, TooShort
from .preprocess import median_filter

log = logging.getLogger(__name__)

MAX_SIMILARITY = math.inf  # similarity of identical cycles; only compared, never summed
UNGROUPED = -1
INTERNAL_SIMILARITY = ("separation", "mean_pairwise", "min_pairwise", "to_centroid")


def _pair(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise LengthMismatch(f"lengths differ: {p.shape[0]} vs {q.shape[0]}")
    return p, q


def abs_distance(p, q) -> float:
    p, q = _pair(p, q)
    return float(np.abs(p - q).sum())


def abs_sim(p, q) -> float:
    d = abs_distance(p, q)
    return MAX_SIMILARITY if d == 0 else 1.0 / d


def grad_sign(p) -> np.ndarray:
    """+1 where the next value is >= the current one, else -1."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape[0] < 2:
        raise TooShort("need at least two points for a gradient")
    return np.where(np.diff(p) >= 0, 1, -1).astype(np.int8)


def rel_sim(p, q) -> int:
    """Number of steps on which the two cycles move in the same direction."""
    p, q = _pair(p, q)
    dp, dq = grad_sign(p), grad_sign(q)
    return int(((1 + dp.astype(np.int64) * dq) // 2).sum())


def hamming(a, b) -> int:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.shape[0]} vs {b.shape[0]}")
    return int((a != b).sum())


def common_grid(cycles: dict):
    """Stack cycle means restricted to bins present in every cycle.

    Returns ``(station_ids, matrix)``.
    """
    sids = list(cycles)
    m = np.vstack([np.asarray(cycles[s].mean, dtype=np.float64) for s in sids])
    keep = ~np.isnan(m).any(axis=0)
    return sids, m[:, keep]


@dataclass
class ClusterModel:
    k: int
    labels: np.ndarray  # station -> cluster
    centroids: np.ndarray  # k x n
    objective: float = 0.0
    n_iter: int = 0
    history: list = field(default_factory=list)
    station_ids: list | None = None
    meta_k: int = 0
    meta_labels: np.ndarray | None = None  # cluster -> meta cluster or UNGROUPED
    meta_centroids: np.ndarray | None = None  # sign vectors
    empty_meta: list = field(default_factory=list)

    def station_meta(self) -> np.ndarray:
        """Meta-cluster of every station (UNGROUPED where its cluster has none)."""
        if self.meta_labels is None:
            raise ValueError("model has no meta clustering")
        return self.meta_labels[self.labels]

    def members(self, c):
        return np.flatnonzero(self.labels == c)


def _farthest_point_init(dist_fn, n_points, k, rng):
    first = int(rng.integers(n_points))
    centers = [first]
    mind = dist_fn(first)
    for _ in range(1, k):
        nxt = int(np.argmax(mind))  # ties -> lowest index
        centers.append(nxt)
        mind = np.minimum(mind, dist_fn(nxt))
    return centers


def kmeans_abs(vectors, k, seed=0, max_iter=100, station_ids=None, n_init=10) -> ClusterModel:
    """k-medians under L1: the stage-1 clustering.

    Centroids start from a farthest-point sweep whose first point is drawn
    with ``seed``. An emptied cluster is re-seeded with the point farthest
    from its current centroid. With ``n_init > 1`` the run with the lowest
    total L1 distance wins.
    """
    x = np.asarray(vectors, dtype=np.float64)
    n_pts = x.shape[0]
    if x.ndim != 2 or x.shape[1] < 2:
        raise TooShort("cycle vectors need at least two points")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n_pts:
        raise KTooLarge(f"k={k} exceeds the number of vectors ({n_pts})")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        model = _kmedians_run(x, k, rng, max_iter)
        if best is None or model.objective < best.objective:
            best = model
    if station_ids is not None:
        best.station_ids = list(station_ids)
    return best


def _kmedians_run(x, k, rng, max_iter):
    n_pts = x.shape[0]
    init = _farthest_point_init(lambda i: _kernels.l1_cross(x[i:i + 1], x)[0], n_pts, k, rng)
    cent = x[init].copy()
    labels = None
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d = _kernels.l1_cross(x, cent)
        new = np.argmin(d, axis=1)
        dist = d[np.arange(n_pts), new]
        # refill empty clusters from the worst-served points
        for c in range(k):
            if not (new == c).any():
                worst = int(np.argmax(dist))
                cent[c] = x[worst]
                new[worst] = c
                dist[worst] = 0.0
        history.append(float(dist.sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            cent[c] = np.median(x[labels == c], axis=0)
    labels = new
    d = _kernels.l1_cross(x, cent)
    objective = float(d[np.arange(n_pts), labels].sum())
    return ClusterModel(k, labels, cent, objective, n_iter, history)


def internal_similarity(vectors, labels, k, method="separation") -> np.ndarray:
    """Per-cluster internal similarity; singletons are MAX_SIMILARITY.

    ``mean_pairwise``, ``min_pairwise`` and ``to_centroid`` aggregate the
    absolute similarity of member pairs (or of members to the median
    centroid). ``separation`` scores how much closer members are to each
    other than to the nearest other cluster: mean L1 distance to that
    cluster divided by the mean pairwise L1 distance inside.
    """
    if method not in INTERNAL_SIMILARITY:
        raise ValueError(f"unknown internal similarity {method!r}")
    x = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(labels)
    members = [np.flatnonzero(labels == c) for c in range(k)]
    dall = _kernels.l1_cross(x, x) if method == "separation" else None
    out = np.empty(k)
    for c, idx in enumerate(members):
        if idx.size <= 1:
            out[c] = MAX_SIMILARITY
            continue
        pts = x[idx]
        if method == "separation":
            inside = dall[np.ix_(idx, idx)][np.triu_indices(idx.size, 1)].mean()
            others = [dall[np.ix_(idx, m)].mean() for o, m in enumerate(members)
                      if o != c and m.size]
            if not others:
                out[c] = 0.0
            elif inside == 0:
                out[c] = MAX_SIMILARITY
            else:
                out[c] = min(others) / inside
            continue
        if method == "to_centroid":
            d = _kernels.l1_cross(pts, np.median(pts, axis=0)[None, :])[:, 0]
        else:
            d = _kernels.l1_cross(pts, pts)[np.triu_indices(idx.size, 1)]
        with np.errstate(divide="ignore"):
            sims = np.where(d == 0, MAX_SIMILARITY, 1.0 / d)
        out[c] = sims.min() if method == "min_pairwise" else sims.mean()
    return out


def similarity_curve(vectors, k_range, seed=0, method="separation", max_iter=100, n_init=10):
    """Minimum internal similarity over clusters for each k."""
    x = np.asarray(vectors, dtype=np.float64)
    curve = []
    for k in k_range:
        model = kmeans_abs(x, k, seed=seed, max_iter=max_iter, n_init=n_init)
        curve.append(float(internal_similarity(x, model.labels, k, method).min()))
    return np.array(curve)


def select_k(vectors, k_range, seed=0, method="separation", max_iter=100,
             n_init=10, return_curve=False):
    """Pick the k just before the smoothed minimum internal similarity first drops.

    The curve is smoothed with a window-3 running median. If it never
    drops, the largest k is returned with a warning.
    """
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise RangeEmpty("empty k range")
    n_pts = np.asarray(vectors).shape[0]
    if ks[0] < 2 or ks[-1] > n_pts:
        raise KTooLarge(f"k range must lie in [2, {n_pts}]")
    curve = similarity_curve(vectors, ks, seed, method, max_iter, n_init)
    smooth = median_filter(curve, 3) if len(ks) > 1 else curve
    chosen = None
    for j in range(1, len(ks)):
        if smooth[j] < smooth[j - 1]:
            chosen = ks[j - 1]
            break
    if chosen is None:
        if len(ks) > 1:
            warnings.warn("minimum internal similarity never decreases; using the largest k",
                          RuntimeWarning, stacklevel=2)
        chosen = ks[-1]
    return (chosen, ks, curve, smooth) if return_curve else chosen


def _hamming_cross(a, b):
    return (a[:, None, :] != b[None, :, :]).sum(axis=2)


def _hamming_kmeans(signs, k, rng, max_iter):
    n = signs.shape[0]
    init = _farthest_point_init(lambda i: _hamming_cross(signs[i:i + 1], signs)[0], n, k, rng)
    cent = signs[init].copy()
    labels = None
    for _ in range(max_iter):
        new = np.argmin(_hamming_cross(signs, cent), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = signs[labels == c]
            if members.size:
                cent[c] = np.where(members.sum(axis=0) >= 0, 1, -1)  # ties -> +1
    labels = new
    obj = int(_hamming_cross(signs, cent)[np.arange(n), labels].sum())
    return labels, cent, obj


def meta_cluster(model: ClusterModel, meta_k=7, seed=0, ceiling=0.5, n_init=10,
                 max_iter=100) -> ClusterModel:
    """Group stage-1 clusters by the gradient signs of their centroids.

    The best of ``n_init`` seeded runs (lowest total Hamming distance) is
    kept. Clusters agreeing with their meta-centroid on less than
    ``ceiling`` of the steps are marked UNGROUPED.
    """
    if meta_k > model.k:
        raise MetaKTooLarge(f"meta_k={meta_k} exceeds k={model.k}")
    if meta_k < 1:
        raise ValueError("meta_k must be >= 1")
    signs = np.vstack([grad_sign(c) for c in model.centroids])
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        labels, cent, obj = _hamming_kmeans(signs, meta_k, rng, max_iter)
        if best is None or obj < best[2]:
            best = (labels, cent, obj)
    labels, cent, _ = best
    steps = signs.shape[1]
    agree = 1.0 - _hamming_cross(signs, cent)[np.arange(model.k), labels] / steps
    meta = labels.astype(np.int64)
    meta[agree < ceiling] = UNGROUPED
    empty = [c for c in range(meta_k) if not (meta == c).any()]
    if empty:
        log.info("meta clusters without members: %s", empty)
    return replace(model, meta_k=meta_k, meta_labels=meta, meta_centroids=cent,
                   empty_meta=empty)
