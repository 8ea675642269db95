from __future__ import annotations

import pytest
from hypothesis import settings

from offloadsim.config import SimConfig
from offloadsim.sim import SimContext
from offloadsim.trace import DayTrace, PeriodRecord, app_classes

# reproducible property-test runs; the suite doubles as an acceptance record
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def apps():
    return app_classes()


@pytest.fixture()
def ctx():
    return SimContext.from_config(SimConfig())


def make_day(locations, wifi, usage=None, n=None, day_index=1, apps=None):
    """Build a DayTrace from parallel location/wifi lists and an optional
    {period: {app_name: size}} map."""
    apps = apps or app_classes()
    n = n or len(locations)
    usage = usage or {}
    periods = []
    for k in range(1, n + 1):
        per_usage = {apps[name]: size for name, size in usage.get(k, {}).items()}
        periods.append(
            PeriodRecord(location=locations[k - 1], wifi_available=bool(wifi[k - 1]),
                         usage=per_usage)
        )
    return DayTrace(day_index=day_index, periods=periods)
