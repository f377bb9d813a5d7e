"""Run configuration shared by the command-line subcommands."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

from .cluster import INTERNAL_SIMILARITY
from .errors import UsageError
from .ingest import read_key_values
from .preprocess import HolidayCalendar, ServiceWindow

SEED_ENV = "BIKEFLOW_SEED"


@dataclass(frozen=True)
class RunConfig:
    store: str = ""
    min_total_slots: int = 10
    global_min_slots: int = 8000
    median_window: int = 3
    median_order: str = "average_first"
    step_minutes: int = 2
    service_window: ServiceWindow = ServiceWindow()
    morning_window: ServiceWindow = ServiceWindow(5 * 60, 12 * 60)
    holidays: HolidayCalendar = field(default_factory=HolidayCalendar)
    route_threshold: float = 0.03
    coupling_score: float = 0.5
    role_threshold: float = 3.0
    speed_kmh: float = 25.0
    lognormal_sigma: float = 0.5
    feature_floor: float = 1e-3
    meta_k: int = 7
    ungrouped_ceiling: float = 0.5
    internal_similarity: str = "separation"
    k_min: int = 2
    k_max: int = 40
    seed: int = 0

    def __post_init__(self):
        checks = [
            (self.min_total_slots >= 0, "min_total_slots must be >= 0"),
            (self.global_min_slots >= 0, "global_min_slots must be >= 0"),
            (self.median_window >= 1 and self.median_window % 2 == 1,
             "median_window must be odd and >= 1"),
            (self.median_order in ("average_first", "filter_first"),
             "median_order must be average_first or filter_first"),
            (self.internal_similarity in INTERNAL_SIMILARITY,
             f"internal_similarity must be one of {', '.join(INTERNAL_SIMILARITY)}"),
            (self.step_minutes >= 1, "step_minutes must be >= 1"),
            (0 <= self.route_threshold < 1, "route_threshold must lie in [0, 1)"),
            (-1 <= self.coupling_score <= 1, "coupling_score must lie in [-1, 1]"),
            (self.role_threshold >= 0, "role_threshold must be >= 0"),
            (self.speed_kmh > 0, "speed_kmh must be > 0"),
            (self.lognormal_sigma > 0, "lognormal_sigma must be > 0"),
            (0 < self.feature_floor < 1, "feature_floor must lie in (0, 1)"),
            (self.meta_k >= 1, "meta_k must be >= 1"),
            (0 <= self.ungrouped_ceiling <= 1, "ungrouped_ceiling must lie in [0, 1]"),
            (2 <= self.k_min <= self.k_max, "need 2 <= k_min <= k_max"),
            (self.service_window.start < self.service_window.end, "empty service_window"),
            (self.morning_window.start < self.morning_window.end, "empty morning_window"),
        ]
        for ok, msg in checks:
            if not ok:
                raise UsageError(msg)

    @classmethod
    def from_mapping(cls, values: dict, base: RunConfig | None = None) -> RunConfig:
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        parsed = {}
        for key, raw in values.items():
            try:
                parsed[key] = _convert(key, raw, known[key])
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key}: {raw!r} ({exc})") from None
        return replace(base or cls(), **parsed)

    @classmethod
    def from_file(cls, path) -> RunConfig:
        try:
            values = read_key_values(path)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return cls.from_mapping(values)


def _convert(key, raw, f):
    if not isinstance(raw, str):
        return raw
    if key in ("service_window", "morning_window"):
        return ServiceWindow.parse(raw)
    if key == "holidays":
        return HolidayCalendar.parse(raw)
    if key in ("store", "median_order", "internal_similarity"):
        return raw
    default = f.default
    return int(raw) if isinstance(default, int) and not isinstance(default, bool) else float(raw)


def resolve_seed(cli_seed=None, config: RunConfig | None = None) -> int:
    """Explicit flag, then the environment variable, then the config value."""
    if cli_seed is not None:
        return int(cli_seed)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return (config or RunConfig()).seed
