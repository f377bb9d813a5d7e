"""Great-circle distances."""

import numpy as np

EARTH_RADIUS_M = 6371008.8


def haversine(a, b):
    """Distance in meters between ``(lat, lon)`` points in degrees.

    Broadcasts over arrays: ``a`` and ``b`` may be ``(..., 2)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lat1, lon1 = np.radians(a[..., 0]), np.radians(a[..., 1])
    lat2, lon2 = np.radians(b[..., 0]), np.radians(b[..., 1])
    h = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    d = 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    return float(d) if d.ndim == 0 else d


def distance_matrix(lat, lon):
    pts = np.column_stack([lat, lon])
    return haversine(pts[:, None, :], pts[None, :, :])
