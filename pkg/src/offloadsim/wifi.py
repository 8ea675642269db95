"""Location-conditioned WiFi access forecasting.

A "location" is an opaque ID with WiFi coverage; access is *functional*
(being somewhere does not guarantee the user connects).  Per-period access
rates v_k(l) are estimated from training days, and overall per-period
probabilities w_k combine them with a second-order Markov location model
that falls back to first order when a pair context was never seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .trace import DayTrace

# Periods with no observed location use a reserved token; it never has WiFi,
# so its access rate is structurally 0.
UNKNOWN = "__unknown__"

_W_DRIFT_TOL = 1e-9


@dataclass
class MobilityHistory:
    """Per-period n-gram counts over training days (sequences end at period k)."""

    n: int
    days: list[tuple[str, ...]] = field(default_factory=list)
    counts: dict[tuple[int, tuple[str, ...]], int] = field(default_factory=dict)

    @property
    def num_days(self) -> int:
        return len(self.days)

    def add_day(self, locations: Sequence[Optional[str]]) -> None:
        locs = tuple(loc if loc is not None else UNKNOWN for loc in locations)
        if len(locs) != self.n:
            raise ValueError(f"expected {self.n} locations, got {len(locs)}")
        self.days.append(locs)
        for k in range(1, self.n + 1):
            for length in (1, 2, 3):
                if k - length + 1 < 1:
                    continue
                seq = locs[k - length : k]
                key = (k, seq)
                self.counts[key] = self.counts.get(key, 0) + 1

    def count(self, k: int, seq: Sequence[str]) -> int:
        return self.counts.get((k, tuple(seq)), 0)

    def locations_at(self, k: int) -> list[str]:
        """Locations ever observed in period k, sorted for determinism."""
        return sorted({day[k - 1] for day in self.days})


@dataclass
class WifiProfile:
    """v_k(l): empirical probability of WiFi access at location l in period k."""

    n: int
    access: dict[tuple[int, str], int] = field(default_factory=dict)
    visits: dict[tuple[int, str], int] = field(default_factory=dict)

    def add_day(self, trace: DayTrace) -> None:
        for k, rec in enumerate(trace.periods, start=1):
            loc = rec.location if rec.location is not None else UNKNOWN
            self.visits[(k, loc)] = self.visits.get((k, loc), 0) + 1
            if rec.wifi_available:
                self.access[(k, loc)] = self.access.get((k, loc), 0) + 1

    def v(self, k: int, location: str) -> float:
        visits = self.visits.get((k, location), 0)
        if visits == 0:
            return 0.0
        return self.access.get((k, location), 0) / visits


@dataclass(frozen=True)
class WifiForecast:
    """Per-period WiFi probabilities valid from `as_of_period` onward."""

    as_of_period: int
    w: tuple[float, ...]
    diagnostics: tuple[str, ...] = ()

    def prob(self, k: int) -> float:
        if k < self.as_of_period:
            raise ValueError(f"forecast is stale before period {self.as_of_period}")
        return self.w[k - 1]


def fit_profile(training: Sequence[DayTrace]) -> tuple[WifiProfile, MobilityHistory]:
    """Tally access rates and mobility n-grams over the training days."""
    if not training:
        raise ValueError("need at least one training day")
    n = training[0].n
    profile = WifiProfile(n=n)
    history = MobilityHistory(n=n)
    for day in training:
        profile.add_day(day)
        history.add_day(day.locations())
    return profile, history


def _clamp(w: float) -> float:
    assert -_W_DRIFT_TOL <= w <= 1.0 + _W_DRIFT_TOL, f"w drifted out of [0,1]: {w}"
    return min(1.0, max(0.0, w))


def initial_forecast(profile: WifiProfile, history: MobilityHistory) -> WifiForecast:
    """Start-of-day forecast: w_k as the visit-frequency mix of v_k(l)."""
    if history.num_days < 1:
        raise ValueError("empty mobility history")
    diagnostics: list[str] = []
    N = history.num_days
    w = []
    for k in range(1, history.n + 1):
        total = 0.0
        for loc in history.locations_at(k):
            total += profile.v(k, loc) * history.count(k, (loc,)) / N
        w.append(_clamp(total))
    return WifiForecast(as_of_period=1, w=tuple(w), diagnostics=tuple(diagnostics))


def _transition(history: MobilityHistory, k: int, prev2: Optional[str], prev1: str,
                loc: str) -> Optional[float]:
    """p_l^k for one candidate next location, or None when both contexts are unseen."""
    if prev2 is not None:
        pair = history.count(k - 1, (prev2, prev1))
        if pair > 0:
            return history.count(k, (prev2, prev1, loc)) / pair
    single = history.count(k - 1, (prev1,))
    if single > 0:
        return history.count(k, (prev1, loc)) / single
    return None


def update_forecast(
    profile: WifiProfile,
    history: MobilityHistory,
    i: int,
    prev2: Optional[str],
    prev1: Optional[str],
) -> WifiForecast:
    """Mid-day forecast for periods k >= i, conditioned on the last two locations.

    For k beyond the next period the conditioning pair is not observable, so
    the most probable predicted location is propagated forward as context
    (ties broken lexicographically).  An unseen context yields w_k = 0 and a
    diagnostic entry.
    """
    if i < 2:
        raise ValueError("update_forecast applies from period 2 onward")
    diagnostics: list[str] = []
    ctx2 = prev2 if prev2 is not None else None
    ctx1 = prev1 if prev1 is not None else UNKNOWN
    w = [math.nan] * history.n
    for k in range(i, history.n + 1):
        locs = history.locations_at(k)
        probs: dict[str, float] = {}
        for loc in locs:
            p = _transition(history, k, ctx2, ctx1, loc)
            if p is not None:
                probs[loc] = p
        if not probs:
            diagnostics.append(f"period {k}: unseen context ({ctx2}, {ctx1})")
            w[k - 1] = 0.0
            ctx2, ctx1 = ctx1, UNKNOWN
            continue
        w[k - 1] = _clamp(sum(p * profile.v(k, loc) for loc, p in probs.items()))
        # modal predicted location carries the chain forward
        best = max(sorted(probs), key=lambda loc: probs[loc])
        ctx2, ctx1 = ctx1, best
    return WifiForecast(as_of_period=i, w=tuple(w), diagnostics=tuple(diagnostics))


def observe_current(forecast: WifiForecast, k: int, available: bool) -> WifiForecast:
    """Fold the live connectivity of period k into a forecast.

    Current-period WiFi is directly observable at planning time; this is
    what turns w_k into an exact 0/1 and drops that period's capacity row.
    """
    if k < forecast.as_of_period:
        raise ValueError("cannot observe a period the forecast no longer covers")
    w = list(forecast.w)
    w[k - 1] = 1.0 if available else 0.0
    return replace(forecast, w=tuple(w))


def prediction_accuracy(forecast: Sequence[float], realized: Sequence[bool]) -> float:
    """Fraction of periods where the 0.5-thresholded forecast matched reality."""
    if len(forecast) != len(realized):
        raise ValueError("forecast and realization lengths differ")
    if not forecast:
        raise ValueError("empty input")
    hits = 0
    for w, obs in zip(forecast, realized):
        predicted = w > 0.5
        if predicted == bool(obs):
            hits += 1
    return hits / len(forecast)
