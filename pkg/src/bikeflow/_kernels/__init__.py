"""Hot loops, compiled when possible.

The Cython extension ``_native`` is used when it was built and imports
cleanly; otherwise the numpy/heapq versions in ``_pure`` are used. Set
``BIKEFLOW_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pure

_impl = _pure
if os.environ.get("BIKEFLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _native as _impl
    except ImportError:
        pass

BACKEND = "pure" if _impl is _pure else "native"

masked_median = _impl.masked_median
l1_cross = _impl.l1_cross
run_day = _impl.run_day

__all__ = ["BACKEND", "masked_median", "l1_cross", "run_day"]
