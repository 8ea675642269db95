"""Execution records shared by the scheduler simulation and the baselines."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .trace import AppClass, AppKind
from .utility import UtilityParams, _utility


class Network(enum.Enum):
    WIFI = "wifi"
    CELLULAR = "cellular"


@dataclass(frozen=True)
class ExecutionRecord:
    """One completed (origin period, app) group."""

    origin: int
    app: AppClass
    executed: int
    network: Network
    rate: float
    size: float
    spend: float
    utility: float

    def __post_init__(self) -> None:
        if self.executed < self.origin:
            raise ValueError("executed period precedes origin")
        if self.network is Network.WIFI and self.spend != 0.0:
            raise ValueError("WiFi executions are free")

    @property
    def wait(self) -> int:
        return self.executed - self.origin

    @property
    def volume(self) -> float:
        """Bytes moved, in normalized units (fixed-time volume scales with rate)."""
        if self.app.kind is AppKind.FIXED_TIME:
            return self.rate * self.size
        return self.size


def realized_utility(
    app: AppClass,
    params: UtilityParams,
    origin: int,
    executed: int,
    network: Network,
    rate: float,
    size: float,
    price: float,
) -> float:
    """Utility of an execution with the WiFi/3G outcome already known."""
    p = 0.0 if network is Network.WIFI else price
    return _utility(params, app.kind, p, executed - origin, rate, size)


def make_record(
    app: AppClass,
    params: UtilityParams,
    origin: int,
    executed: int,
    network: Network,
    rate: float,
    size: float,
    price: float,
) -> ExecutionRecord:
    if network is Network.WIFI:
        spend = 0.0
    elif app.kind is AppKind.FIXED_TIME:
        spend = price * rate * size
    else:
        spend = price * size
    util = realized_utility(app, params, origin, executed, network, rate, size, price)
    return ExecutionRecord(origin, app, executed, network, rate, size, spend, util)
