"""Reference offloading policies: on-the-spot and deadline-bounded delay.

On-the-spot executes every group in its origin period, over WiFi when it is
up and otherwise over 3G.  Delayed waits up to `deadline` periods for WiFi
and falls back to 3G at the deadline.  Neither policy uses the rate grid:
concurrent 3G groups split the period's bandwidth cap equally (configurable
to full-cap-per-group for sensitivity runs).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

from .records import ExecutionRecord, Network, make_record
from .trace import AppClass, DayTrace, PricingPlan
from .utility import UtilityParams


class Policy(enum.Enum):
    ON_THE_SPOT = "on-the-spot"
    DELAYED = "delayed"


@dataclass(frozen=True)
class BaselineConfig:
    policy: Policy
    deadline: int = 1
    fair_share: bool = True

    def __post_init__(self) -> None:
        if self.policy is Policy.DELAYED and self.deadline < 1:
            raise ValueError("delayed offloading needs deadline >= 1")


def _share(beta: float, active: int, fair: bool) -> float:
    if not fair:
        return beta
    return min(beta, beta / active)


def _demands(day: DayTrace) -> list[tuple[int, AppClass, float]]:
    out = []
    for k, rec in enumerate(day.periods, start=1):
        for app in sorted(rec.usage, key=lambda a: a.name):
            size = rec.usage[app]
            if size > 0:
                out.append((k, app, size))
    return out


def run_on_the_spot(
    day: DayTrace,
    prices: PricingPlan,
    beta: float,
    params: Mapping[str, UtilityParams],
    fair_share: bool = True,
) -> list[ExecutionRecord]:
    """Use WiFi when currently available, 3G otherwise; never wait."""
    records = []
    for k, rec in enumerate(day.periods, start=1):
        demands = [(app, rec.usage[app]) for app in sorted(rec.usage, key=lambda a: a.name)
                   if rec.usage[app] > 0]
        if not demands:
            continue
        if rec.wifi_available:
            for app, size in demands:
                records.append(make_record(app, params[app.name], k, k, Network.WIFI, 1.0,
                                           size, prices.unit_price))
        else:
            rate = _share(beta, len(demands), fair_share)
            for app, size in demands:
                records.append(make_record(app, params[app.name], k, k, Network.CELLULAR, rate,
                                           size, prices.unit_price))
    return records


def run_delayed(
    day: DayTrace,
    deadline: int,
    prices: PricingPlan,
    beta: float,
    params: Mapping[str, UtilityParams],
    fair_share: bool = True,
) -> list[ExecutionRecord]:
    """Wait up to `deadline` periods for WiFi, then send over 3G.

    The wait window is truncated at the end of the day, so late groups fall
    back to 3G at period n.
    """
    if deadline < 1:
        raise ValueError("deadline must be >= 1")
    n = day.n
    wifi = [rec.wifi_available for rec in day.periods]

    planned: list[tuple[int, AppClass, float, int, Network]] = []
    cellular_load: dict[int, int] = {}
    for origin, app, size in _demands(day):
        limit = min(origin + deadline, n)
        target = None
        for k in range(origin, limit + 1):
            if wifi[k - 1]:
                target = (k, Network.WIFI)
                break
        if target is None:
            target = (limit, Network.CELLULAR)
            cellular_load[limit] = cellular_load.get(limit, 0) + 1
        planned.append((origin, app, size, target[0], target[1]))

    records = []
    for origin, app, size, k, network in planned:
        if network is Network.WIFI:
            rate = 1.0
        else:
            rate = _share(beta, cellular_load[k], fair_share)
        records.append(make_record(app, params[app.name], origin, k, network, rate, size,
                                   prices.unit_price))
    return records


def run_baseline(
    day: DayTrace,
    config: BaselineConfig,
    prices: PricingPlan,
    beta: float,
    params: Mapping[str, UtilityParams],
) -> list[ExecutionRecord]:
    if config.policy is Policy.ON_THE_SPOT:
        return run_on_the_spot(day, prices, beta, params, config.fair_share)
    return run_delayed(day, config.deadline, prices, beta, params, config.fair_share)
