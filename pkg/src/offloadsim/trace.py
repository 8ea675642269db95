"""Domain types and CSV ingestion for mobility / WiFi / usage traces.

All volumes are kept in normalized units: the baseline WiFi link rate is 1,
so one volume unit is "one second of WiFi transfer".  Fixed-time demand
(streaming) is measured in seconds and never converted.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional


class TraceError(Exception):
    """Malformed or inconsistent trace input."""


class AppKind(enum.Enum):
    FIXED_VOLUME = "FixedVolume"
    FIXED_TIME = "FixedTime"


APP_NAMES = ("Email", "Browsing", "Video", "SocialNetworking", "Downloads")

# Video streams for a fixed duration; everything else moves a fixed volume.
DEFAULT_APP_KINDS: Mapping[str, AppKind] = {
    "Email": AppKind.FIXED_VOLUME,
    "Browsing": AppKind.FIXED_VOLUME,
    "Video": AppKind.FIXED_TIME,
    "SocialNetworking": AppKind.FIXED_VOLUME,
    "Downloads": AppKind.FIXED_VOLUME,
}


@dataclass(frozen=True)
class AppClass:
    name: str
    kind: AppKind

    def __post_init__(self) -> None:
        if self.name not in APP_NAMES:
            raise TraceError(f"unknown application type {self.name!r}")


def app_classes(kind_overrides: Optional[Mapping[str, AppKind]] = None) -> dict[str, AppClass]:
    """The five schedulable application types, with optional kind overrides."""
    kinds = dict(DEFAULT_APP_KINDS)
    if kind_overrides:
        for name, kind in kind_overrides.items():
            if name not in APP_NAMES:
                raise TraceError(f"unknown application type {name!r} in kind override")
            kinds[name] = kind
    return {name: AppClass(name, kinds[name]) for name in APP_NAMES}


@dataclass(frozen=True)
class PricingPlan:
    """3G tariff: unit price per normalized volume unit and a monthly cap."""

    unit_price: float
    monthly_budget: float
    billing_day: int = 1

    def __post_init__(self) -> None:
        if self.unit_price <= 0:
            raise ValueError("unit_price must be positive")
        if self.monthly_budget < 0:
            raise ValueError("monthly_budget must be nonnegative")


@dataclass(frozen=True)
class RateGrid:
    """Discrete rate choices, normalized to WiFi speed 1.

    The base model uses strictly positive 3G rates; the network-selection
    extension adds a WiFi grid and allows 0 entries (0 = interface unused).
    """

    gamma_set: tuple[float, ...]
    beta: float
    delta_set: tuple[float, ...] = ()
    includes_zero: bool = False

    def __post_init__(self) -> None:
        gammas = tuple(self.gamma_set)
        if not gammas:
            raise ValueError("gamma_set must be nonempty")
        if list(gammas) != sorted(gammas):
            raise ValueError("gamma_set must be ascending")
        if self.delta_set and list(self.delta_set) != sorted(self.delta_set):
            raise ValueError("delta_set must be ascending")
        low = 0.0 if self.includes_zero else None
        for g in gammas:
            if g < 0 or (not self.includes_zero and g <= 0):
                raise ValueError(f"3G rate {g} out of range (includes_zero={self.includes_zero})")
        if low is not None and gammas[0] != 0.0:
            raise ValueError("a zero-including grid must actually contain 0")
        if max(gammas) > self.beta:
            raise ValueError("max 3G rate exceeds the per-period bandwidth cap")

    @property
    def positive_gammas(self) -> tuple[float, ...]:
        return tuple(g for g in self.gamma_set if g > 0)

    @property
    def positive_deltas(self) -> tuple[float, ...]:
        return tuple(d for d in self.delta_set if d > 0)


@dataclass
class PeriodRecord:
    """One period of one day: where the user was, whether WiFi worked, what ran."""

    location: Optional[str]
    wifi_available: bool
    usage: dict[AppClass, float] = field(default_factory=dict)

    def validate(self) -> None:
        if self.wifi_available and self.location is None:
            raise TraceError("wifi_available requires an observed location")
        for app, size in self.usage.items():
            if size < 0:
                raise TraceError(f"negative usage {size} for {app.name}")


@dataclass
class DayTrace:
    day_index: int
    periods: list[PeriodRecord]

    @property
    def n(self) -> int:
        return len(self.periods)

    def period(self, k: int) -> PeriodRecord:
        """Period records are addressed 1..n."""
        return self.periods[k - 1]

    def locations(self) -> list[Optional[str]]:
        return [rec.location for rec in self.periods]

    def usage_total(self, app: AppClass) -> float:
        return sum(rec.usage.get(app, 0.0) for rec in self.periods)

    def validate(self, n: int) -> None:
        if len(self.periods) != n:
            raise TraceError(
                f"day {self.day_index} has {len(self.periods)} periods, expected {n}"
            )
        for rec in self.periods:
            rec.validate()


def normalize_volume(size_bytes: float, wifi_speed: float) -> float:
    """Convert raw bytes to normalized volume units (seconds at WiFi speed 1)."""
    if wifi_speed <= 0:
        raise ValueError("wifi_speed must be positive")
    return size_bytes / wifi_speed


CSV_HEADER = ["day", "period", "location", "wifi", "app", "usage"]


def _parse_row(row: Mapping[str, str], lineno: int, n: int) -> tuple:
    try:
        day = int(row["day"])
        period = int(row["period"])
    except (KeyError, ValueError) as exc:
        raise TraceError(f"line {lineno}: bad day/period field ({exc})") from None
    if not 1 <= period <= n:
        raise TraceError(f"line {lineno}: period {period} outside 1..{n}")
    location = (row.get("location") or "").strip() or None
    wifi_raw = (row.get("wifi") or "").strip()
    if wifi_raw not in ("0", "1"):
        raise TraceError(f"line {lineno}: wifi flag must be 0 or 1, got {wifi_raw!r}")
    wifi = wifi_raw == "1"
    app_name = (row.get("app") or "").strip()
    usage_raw = (row.get("usage") or "").strip()
    if app_name and not usage_raw:
        raise TraceError(f"line {lineno}: app given without usage")
    usage = None
    if usage_raw:
        try:
            usage = float(usage_raw)
        except ValueError:
            raise TraceError(f"line {lineno}: bad usage value {usage_raw!r}") from None
        if usage < 0:
            raise TraceError(f"line {lineno}: negative usage {usage}")
    return day, period, location, wifi, app_name, usage


def load_trace(
    path: str | Path,
    n: int = 24,
    wifi_speed: float = 1.0,
    apps: Optional[Mapping[str, AppClass]] = None,
) -> list[DayTrace]:
    """Read a trace CSV into validated ``DayTrace`` objects, in day order.

    The file carries one row per (day, period, app) with nonzero usage plus
    one bare row per (day, period) that saw no usage.  Usage is raw bytes for
    fixed-volume apps (converted here) and seconds for fixed-time apps.
    """
    apps = apps or app_classes()
    path = Path(path)
    days: dict[int, dict[int, PeriodRecord]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != CSV_HEADER:
            raise TraceError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            day, period, location, wifi, app_name, usage = _parse_row(row, lineno, n)
            periods = days.setdefault(day, {})
            rec = periods.get(period)
            if rec is None:
                rec = PeriodRecord(location=location, wifi_available=wifi)
                periods[period] = rec
            elif rec.location != location or rec.wifi_available != wifi:
                raise TraceError(
                    f"line {lineno}: conflicting location/wifi for day {day} period {period}"
                )
            if app_name:
                if app_name not in apps:
                    raise TraceError(f"line {lineno}: unknown app {app_name!r}")
                app = apps[app_name]
                size = usage if app.kind is AppKind.FIXED_TIME else normalize_volume(usage, wifi_speed)
                rec.usage[app] = rec.usage.get(app, 0.0) + size

    traces = []
    for day in sorted(days):
        periods = days[day]
        missing = [k for k in range(1, n + 1) if k not in periods]
        if missing:
            raise TraceError(f"day {day} is missing periods {missing} (expected {n} per day)")
        trace = DayTrace(day_index=day, periods=[periods[k] for k in range(1, n + 1)])
        trace.validate(n)
        traces.append(trace)
    return traces


def serialize_trace(
    traces: Iterable[DayTrace],
    path: str | Path,
    wifi_speed: float = 1.0,
) -> None:
    """Write traces back to the CSV format accepted by :func:`load_trace`."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for trace in traces:
            for k, rec in enumerate(trace.periods, start=1):
                base = [trace.day_index, k, rec.location or "", int(rec.wifi_available)]
                wrote_usage = False
                for app in sorted(rec.usage, key=lambda a: a.name):
                    size = rec.usage[app]
                    if size == 0:
                        continue
                    raw = size if app.kind is AppKind.FIXED_TIME else size * wifi_speed
                    writer.writerow(base + [app.name, repr(raw)])
                    wrote_usage = True
                if not wrote_usage:
                    writer.writerow(base + ["", ""])


def load_trace_set(
    path: str | Path,
    n: int = 24,
    wifi_speed: float = 1.0,
    apps: Optional[Mapping[str, AppClass]] = None,
) -> dict[str, list[DayTrace]]:
    """Load one user (a CSV file) or a cohort (a directory of ``<user>.csv``)."""
    path = Path(path)
    if path.is_dir():
        users = {}
        for child in sorted(path.glob("*.csv")):
            users[child.stem] = load_trace(child, n=n, wifi_speed=wifi_speed, apps=apps)
        if not users:
            raise TraceError(f"{path}: no *.csv trace files found")
        return users
    return {path.stem: load_trace(path, n=n, wifi_speed=wifi_speed, apps=apps)}
