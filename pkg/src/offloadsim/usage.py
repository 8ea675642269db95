"""Per-application demand forecasting and deferral-aware history adjustment.

Forecasts are a per-(period, app) moving average over the last W days of
history.  Because the scheduler itself moves usage to later periods, each
day's observations are first shifted back to their origin periods before
entering the history, otherwise tomorrow's forecast would chase yesterday's
deferrals instead of the underlying pattern.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .trace import AppClass

_NEG_TOL = -1e-9


@dataclass
class ObservedUsage:
    """sigma_j(k) per day; all sizes nonnegative, in the app's native units."""

    n: int
    days: list[dict[tuple[int, str], float]] = field(default_factory=list)

    def new_day(self) -> None:
        self.days.append({})

    def record(self, period: int, app: AppClass | str, size: float) -> None:
        if size < 0:
            raise ValueError(f"negative usage {size}")
        if not self.days:
            self.new_day()
        name = app.name if isinstance(app, AppClass) else app
        key = (period, name)
        self.days[-1][key] = self.days[-1].get(key, 0.0) + size

    def add_day(self, sigma: Mapping[tuple[int, str], float]) -> None:
        for (k, _), size in sigma.items():
            if size < 0:
                raise ValueError(f"negative usage {size}")
            if not 1 <= k <= self.n:
                raise ValueError(f"period {k} outside 1..{self.n}")
        self.days.append(dict(sigma))


@dataclass(frozen=True)
class DemandForecast:
    """Predicted sizes s_j(k), nonnegative, averaged over a W-day window."""

    window: int
    s: Mapping[tuple[int, str], float]

    def size(self, k: int, app: AppClass | str) -> float:
        name = app.name if isinstance(app, AppClass) else app
        return self.s.get((k, name), 0.0)


def record_usage(usage: ObservedUsage, period: int, app: AppClass | str, size: float) -> ObservedUsage:
    usage.record(period, app, size)
    return usage


def forecast_usage(history: ObservedUsage, window: int) -> DemandForecast:
    """Moving average of the last `window` days of (adjusted) usage."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if not history.days:
        raise ValueError("no usage history to forecast from")
    recent = history.days[-window:]
    keys = {key for day in recent for key in day}
    s = {key: sum(day.get(key, 0.0) for day in recent) / len(recent) for key in keys}
    return DemandForecast(window=window, s={k: v for k, v in s.items() if v > 0.0})


def adjust_for_deferrals(
    sigma: Mapping[tuple[int, str], float],
    forecast: DemandForecast,
    deferrals: Iterable[tuple[int, str, int]],
) -> dict[tuple[int, str], float]:
    """Shift one day's observed usage back to the periods it was deferred from.

    `deferrals` lists executed moves (origin i, app j, executed k) with k > i.
    The amount credited back from sigma_j(k) to each origin is proportional
    to the predicted size deferred:

        share(i -> k) = s_j(i) * sigma_j(k) / (s_j(k) + sum_l c_l^j(k) s_j(l))

    A zero denominator means no predicted mass flowed into k, so the term is
    0.  Total usage per app is conserved exactly.
    """
    adjusted = dict(sigma)
    into: dict[tuple[int, str], list[int]] = {}
    for origin, app, k in deferrals:
        if k <= origin:
            raise ValueError(f"deferral target {k} not after origin {origin}")
        into.setdefault((k, app), []).append(origin)

    for (k, app), origins in sorted(into.items()):
        observed_k = adjusted.get((k, app), 0.0)
        denom = forecast.size(k, app) + sum(forecast.size(i, app) for i in origins)
        if denom <= 0.0 or observed_k == 0.0:
            continue
        total_credit = 0.0
        for origin in sorted(origins):
            credit = forecast.size(origin, app) * observed_k / denom
            adjusted[(origin, app)] = adjusted.get((origin, app), 0.0) + credit
            total_credit += credit
        remainder = observed_k - total_credit
        if remainder < _NEG_TOL:
            warnings.warn(
                f"deferral adjustment drove sigma negative at ({k}, {app}): {remainder}",
                RuntimeWarning,
            )
        adjusted[(k, app)] = max(0.0, remainder)
    return adjusted
