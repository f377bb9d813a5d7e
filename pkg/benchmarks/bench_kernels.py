"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so the environment switch does not
matter here. Outputs are checked for equality before timing.
"""

import argparse
import timeit

import numpy as np

from bikeflow._kernels import _pure

try:
    from bikeflow._kernels import _native
except ImportError:
    _native = None


def cases(rng):
    series = rng.integers(0, 30, 20_000).astype(np.float64)
    series[rng.random(series.size) < 0.05] = np.nan
    x = rng.random((300, 570)) * 30
    y = rng.random((40, 570)) * 30

    n = 40
    cap = rng.integers(15, 40, n).astype(np.int64)
    stock = (cap * 0.5).astype(np.int64)
    pos = rng.random((n, 2)) * 5000
    travel = np.hypot(*(pos[:, None, :] - pos[None, :, :]).transpose(2, 0, 1)) / (25 / 3.6)
    k = 6000
    req_t = np.sort(rng.uniform(18000, 86400, k))
    req_o = rng.integers(0, n, k).astype(np.int64)
    req_d = rng.integers(0, n, k).astype(np.int64)
    truck_t = np.sort(rng.uniform(18000, 86400, 10))
    truck_b = np.full(10, 8, dtype=np.int64)
    snap_t = np.arange(18000, 86400, 120, dtype=np.float64)
    day = (stock, cap, travel, req_t, req_o, req_d, truck_t, truck_b, snap_t, 600.0)
    return {
        "masked_median (20k, w=5)": ("masked_median", (series, 5)),
        "l1_cross (300x40x570)": ("l1_cross", (x, y)),
        "run_day (40 st, 6k trips)": ("run_day", day),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(u, v) for u, v in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b, equal_nan=True) or np.allclose(a, b, equal_nan=True)
    return a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _native is None:
        print("native extension not built; run `pip install -e . --no-build-isolation` first")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'pure [ms]':>10s} {'native [ms]':>12s} {'speedup':>8s}")
    for label, (name, args_) in cases(rng).items():
        fp, fn = getattr(_pure, name), getattr(_native, name)
        assert same(fp(*args_), fn(*args_)), f"{name}: backends disagree"
        tp = min(timeit.repeat(lambda: fp(*args_), number=1, repeat=args.repeat)) * 1e3
        tn = min(timeit.repeat(lambda: fn(*args_), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:28s} {tp:10.2f} {tn:12.2f} {tp / tn:7.1f}x")


if __name__ == "__main__":
    main()
