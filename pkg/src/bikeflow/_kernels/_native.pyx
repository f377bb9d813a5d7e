# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pure.py``.

Results must match the pure implementation exactly, including the order
in which simultaneous simulator events are handled.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isnan, NAN, INFINITY

cnp.import_array()


cdef double _median_sorted(double* buf, Py_ssize_t m) nogil:
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(1, m):
        v = buf[i]
        j = i - 1
        while j >= 0 and buf[j] > v:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = v
    if m % 2:
        return buf[m // 2]
    return (buf[m // 2 - 1] + buf[m // 2]) / 2.0


def masked_median(values, Py_ssize_t window):
    cdef double[::1] x = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    buf_arr = np.empty(max(window, 1), dtype=np.float64)
    cdef double[::1] buf = buf_arr
    cdef Py_ssize_t half = window // 2
    cdef Py_ssize_t i, k, h, m
    cdef double v
    for i in range(n):
        h = half
        if i < h:
            h = i
        if n - 1 - i < h:
            h = n - 1 - i
        m = 0
        for k in range(i - h, i + h + 1):
            v = x[k]
            if not isnan(v):
                buf[m] = v
                m += 1
        if m:
            out[i] = _median_sorted(&buf[0], m)
        else:
            out[i] = NAN
    return out_arr


def l1_cross(x, y):
    cdef double[:, ::1] a = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, d4 = d - d % 4
    cdef double s0, s1, s2, s3
    # branchless abs and four accumulators; sums may differ from numpy in the last ulp
    with nogil:
        for i in range(n):
            for j in range(m):
                s0 = s1 = s2 = s3 = 0.0
                for k in range(0, d4, 4):
                    s0 += fabs(a[i, k] - b[j, k])
                    s1 += fabs(a[i, k + 1] - b[j, k + 1])
                    s2 += fabs(a[i, k + 2] - b[j, k + 2])
                    s3 += fabs(a[i, k + 3] - b[j, k + 3])
                for k in range(d4, d):
                    s0 += fabs(a[i, k] - b[j, k])
                out[i, j] = (s0 + s1) + (s2 + s3)
    return out_arr


cdef class _EventHeap:
    """Binary min-heap keyed on (time, seq)."""
    cdef double[::1] time
    cdef long long[::1] seq
    cdef long long[::1] station
    cdef long long[::1] origin
    cdef double[::1] depart
    cdef long long[::1] kind
    cdef object _arrays
    cdef public Py_ssize_t size

    def __init__(self, Py_ssize_t capacity):
        self.size = 0
        self._alloc(max(capacity, 16))

    cdef _alloc(self, Py_ssize_t capacity):
        arrays = [np.empty(capacity, dtype=np.float64),
                  np.empty(capacity, dtype=np.int64),
                  np.empty(capacity, dtype=np.int64),
                  np.empty(capacity, dtype=np.int64),
                  np.empty(capacity, dtype=np.float64),
                  np.empty(capacity, dtype=np.int64)]
        if self.size:
            for new, old in zip(arrays, self._arrays):
                new[:self.size] = old[:self.size]
        self._arrays = arrays
        self.time, self.seq, self.station, self.origin, self.depart, self.kind = arrays

    cdef inline bint _less(self, Py_ssize_t a, Py_ssize_t b):
        if self.time[a] < self.time[b]:
            return True
        if self.time[a] > self.time[b]:
            return False
        return self.seq[a] < self.seq[b]

    cdef inline void _swap(self, Py_ssize_t a, Py_ssize_t b):
        self.time[a], self.time[b] = self.time[b], self.time[a]
        self.seq[a], self.seq[b] = self.seq[b], self.seq[a]
        self.station[a], self.station[b] = self.station[b], self.station[a]
        self.origin[a], self.origin[b] = self.origin[b], self.origin[a]
        self.depart[a], self.depart[b] = self.depart[b], self.depart[a]
        self.kind[a], self.kind[b] = self.kind[b], self.kind[a]

    cdef push(self, double t, long long s, long long station,
              long long origin, double depart, long long kind):
        cdef Py_ssize_t i, parent
        if self.size == self.time.shape[0]:
            self._alloc(2 * self.size)
        i = self.size
        self.time[i] = t
        self.seq[i] = s
        self.station[i] = station
        self.origin[i] = origin
        self.depart[i] = depart
        self.kind[i] = kind
        self.size += 1
        while i > 0:
            parent = (i - 1) // 2
            if self._less(i, parent):
                self._swap(i, parent)
                i = parent
            else:
                break

    cdef void pop_root(self):
        cdef Py_ssize_t i = 0, left, right, smallest
        self.size -= 1
        if self.size == 0:
            return
        self._swap(0, self.size)
        while True:
            left = 2 * i + 1
            right = left + 1
            smallest = i
            if left < self.size and self._less(left, smallest):
                smallest = left
            if right < self.size and self._less(right, smallest):
                smallest = right
            if smallest == i:
                break
            self._swap(i, smallest)
            i = smallest


def run_day(stock, cap, travel, req_t, req_o, req_d, truck_t, truck_b,
            snap_t, double retry):
    stock_arr = np.array(stock, dtype=np.int64)
    cdef long long[::1] st = stock_arr
    cdef long long[::1] cp = np.ascontiguousarray(cap, dtype=np.int64)
    cdef double[:, ::1] tr = np.ascontiguousarray(travel, dtype=np.float64)
    cdef double[::1] rt = np.ascontiguousarray(req_t, dtype=np.float64)
    cdef long long[::1] ro = np.ascontiguousarray(req_o, dtype=np.int64)
    cdef long long[::1] rd = np.ascontiguousarray(req_d, dtype=np.int64)
    cdef double[::1] kt = np.ascontiguousarray(truck_t, dtype=np.float64)
    cdef long long[::1] kb = np.ascontiguousarray(truck_b, dtype=np.int64)
    cdef double[::1] sn = np.ascontiguousarray(snap_t, dtype=np.float64)

    cdef Py_ssize_t n_req = rt.shape[0], n_truck = kt.shape[0]
    cdef Py_ssize_t n_snap = sn.shape[0], n_st = st.shape[0]

    snap_arr = np.zeros((n_snap, n_st), dtype=np.int64)
    transit_arr = np.zeros(n_snap, dtype=np.int64)
    trips_arr = np.empty((n_req, 4), dtype=np.float64)
    cdef long long[:, ::1] snap = snap_arr
    cdef long long[::1] transit = transit_arr
    cdef double[:, ::1] trips = trips_arr

    cdef _EventHeap heap = _EventHeap(n_req + 16)
    cdef long long seq = 0
    cdef Py_ssize_t ir = 0, ik = 0, im = 0, n_trips = 0, j
    cdef long long n_refused = 0, n_rerouted = 0
    cdef double t_heap, t_truck, t_req, best, t
    cdef int which
    cdef long long station, origin, kind, o, d, src, dst, moved
    cdef double depart

    while im < n_snap:
        t_heap = heap.time[0] if heap.size else INFINITY
        t_truck = kt[ik] if ik < n_truck else INFINITY
        t_req = rt[ir] if ir < n_req else INFINITY
        best = t_heap
        which = 0
        if t_truck < best:
            best = t_truck
            which = 1
        if t_req < best:
            best = t_req
            which = 2
        if sn[im] < best:
            which = 3

        if which == 0:
            t = heap.time[0]
            station = heap.station[0]
            origin = heap.origin[0]
            depart = heap.depart[0]
            kind = heap.kind[0]
            heap.pop_root()
            if st[station] < cp[station]:
                st[station] += 1
                if kind == 0:
                    trips[n_trips, 0] = origin
                    trips[n_trips, 1] = station
                    trips[n_trips, 2] = depart
                    trips[n_trips, 3] = t
                    n_trips += 1
            else:
                if kind == 0:
                    n_rerouted += 1
                heap.push(t + retry, seq, origin, origin, depart, 1)
                seq += 1
        elif which == 1:
            src = 0
            dst = 0
            for j in range(1, n_st):
                if st[j] > st[src]:
                    src = j
                if st[j] < st[dst]:
                    dst = j
            if src != dst:
                moved = kb[ik]
                if st[src] < moved:
                    moved = st[src]
                if cp[dst] - st[dst] < moved:
                    moved = cp[dst] - st[dst]
                if moved > 0:
                    st[src] -= moved
                    st[dst] += moved
            ik += 1
        elif which == 2:
            o = ro[ir]
            d = rd[ir]
            if st[o] > 0:
                st[o] -= 1
                t = rt[ir]
                heap.push(t + tr[o, d], seq, d, o, t, 0)
                seq += 1
            else:
                n_refused += 1
            ir += 1
        else:
            for j in range(n_st):
                snap[im, j] = st[j]
            transit[im] = heap.size
            im += 1

    return (snap_arr, transit_arr, trips_arr[:n_trips].copy(), stock_arr,
            int(n_refused), int(n_rerouted))
