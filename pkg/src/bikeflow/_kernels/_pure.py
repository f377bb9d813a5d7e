"""Pure-Python/numpy implementations of the hot kernels.

Semantics here are the reference; ``_native.pyx`` must reproduce them
bit-for-bit (see tests/test_kernels.py).
"""

import heapq
import warnings

import numpy as np

# event priorities for simultaneous times
_P_ARRIVAL, _P_TRUCK, _P_REQUEST, _P_SNAPSHOT = 0, 1, 2, 3
_KIND_TRIP, _KIND_RETURN = 0, 1


def masked_median(values, window):
    """Centered running median that skips NaN.

    The window shrinks symmetrically near the edges, so it always has odd
    length. A position whose window holds no finite value stays NaN.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    out = np.full(n, np.nan)
    half = window // 2
    if n > 2 * half:
        win = np.lib.stride_tricks.sliding_window_view(x, 2 * half + 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN windows
            out[half:n - half] = np.nanmedian(win, axis=1)
    for i in list(range(min(half, n))) + list(range(max(n - half, half), n)):
        h = min(half, i, n - 1 - i)
        seg = x[i - h:i + h + 1]
        seg = seg[~np.isnan(seg)]
        if seg.size:
            out[i] = np.median(seg)
    return out


def l1_cross(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out = np.empty((x.shape[0], y.shape[0]))
    for i in range(x.shape[0]):
        out[i] = np.abs(y - x[i]).sum(axis=1)
    return out


def run_day(stock, cap, travel, req_t, req_o, req_d, truck_t, truck_b,
            snap_t, retry):
    """Replay one day of trip requests against station capacities.

    Returns ``(snap_bikes, snap_transit, trips, final_stock, n_refused,
    n_rerouted)`` where ``trips`` is an ``(n, 4)`` float array of
    completed trips ``(origin, dest, depart, arrive)``.
    """
    stock = np.array(stock, dtype=np.int64)
    cap = np.asarray(cap, dtype=np.int64)
    travel = np.asarray(travel, dtype=np.float64)
    n_req, n_truck, n_snap = len(req_t), len(truck_t), len(snap_t)
    n_st = stock.shape[0]

    snap_bikes = np.zeros((n_snap, n_st), dtype=np.int64)
    snap_transit = np.zeros(n_snap, dtype=np.int64)
    trips = []
    heap = []
    seq = 0
    ir = ik = im = 0
    n_refused = n_rerouted = 0
    inf = float("inf")

    while im < n_snap:
        t_heap = heap[0][0] if heap else inf
        t_truck = truck_t[ik] if ik < n_truck else inf
        t_req = req_t[ir] if ir < n_req else inf
        t_snap = snap_t[im]
        # ties resolved by the fixed priority order
        best, which = t_heap, _P_ARRIVAL
        if t_truck < best:
            best, which = t_truck, _P_TRUCK
        if t_req < best:
            best, which = t_req, _P_REQUEST
        if t_snap < best:
            best, which = t_snap, _P_SNAPSHOT

        if which == _P_ARRIVAL:
            t, _, station, origin, depart, kind = heapq.heappop(heap)
            if stock[station] < cap[station]:
                stock[station] += 1
                if kind == _KIND_TRIP:
                    trips.append((origin, station, depart, t))
            else:
                if kind == _KIND_TRIP:
                    n_rerouted += 1
                heapq.heappush(heap, (t + retry, seq, origin, origin, depart,
                                      _KIND_RETURN))
                seq += 1
        elif which == _P_TRUCK:
            src = int(np.argmax(stock))
            dst = int(np.argmin(stock))
            if src != dst:
                moved = min(int(truck_b[ik]), int(stock[src]),
                            int(cap[dst] - stock[dst]))
                if moved > 0:
                    stock[src] -= moved
                    stock[dst] += moved
            ik += 1
        elif which == _P_REQUEST:
            o, d = int(req_o[ir]), int(req_d[ir])
            if stock[o] > 0:
                stock[o] -= 1
                t = req_t[ir]
                heapq.heappush(heap, (t + travel[o, d], seq, d, o, t,
                                      _KIND_TRIP))
                seq += 1
            else:
                n_refused += 1
            ir += 1
        else:
            snap_bikes[im] = stock
            snap_transit[im] = len(heap)
            im += 1

    trips = np.array(trips, dtype=np.float64).reshape(-1, 4)
    return snap_bikes, snap_transit, trips, stock, n_refused, n_rerouted
