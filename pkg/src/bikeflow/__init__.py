"""Bike-share occupancy analytics.

Ingest station snapshots, build daily activity cycles, cluster stations,
forecast availability and infer probable morning routes from aggregate
counts. ``bikeflow.simgen`` generates synthetic networks with known trips.
"""

from ._kernels import BACKEND
from .errors import BikeflowError, DataError, UsageError

__version__ = "0.1.0"

__all__ = ["BACKEND", "BikeflowError", "DataError", "UsageError", "__version__"]
