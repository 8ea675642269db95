"""Seeded synthetic traces: routine mobility, per-location WiFi odds, and
diurnal per-app demand.  Used by the property/acceptance harnesses and the
`synth` CLI subcommand."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .trace import AppClass, AppKind, DayTrace, PeriodRecord, app_classes

HOME, WORK, CAFE, GYM, STREET = "home", "work", "cafe", "gym", "street"

# per-location WiFi access probability ranges (sampled once per user)
_WIFI_RANGES = {
    HOME: (0.8, 0.95),
    WORK: (0.2, 0.6),
    CAFE: (0.55, 0.8),
    GYM: (0.1, 0.3),
    STREET: (0.0, 0.02),
}

# (candidate periods, habitual slots, low mean, high mean); sizes are
# normalized volume units for fixed-volume apps and seconds for Video
_DEMAND_PROFILES = {
    "Email": (range(8, 23), 7, 0.3, 3.0),
    "Browsing": (range(8, 24), 6, 1.0, 10.0),
    "Video": (range(13, 24), 3, 180.0, 900.0),
    "SocialNetworking": (range(9, 24), 6, 1.0, 20.0),
    "Downloads": (range(9, 22), 2, 30.0, 200.0),
}

_HABIT_PROB = 0.85  # chance a habitual slot is actually used on a given day
_STRAY_PROB = 0.02  # chance of off-habit usage in any other candidate slot


@dataclass(frozen=True)
class UserArchetype:
    wifi_probs: dict[str, float]
    cafe_lunch: bool  # habitual cafe visit at lunch, conditioned on being at work
    gym_evening: bool  # two-period gym detour on the way home
    demand_scale: float
    habits: dict[str, tuple[tuple[int, ...], float]]  # app -> (slots, mean size)


def _draw_archetype(rng: np.random.Generator) -> UserArchetype:
    wifi = {loc: float(rng.uniform(*rng_range)) for loc, rng_range in _WIFI_RANGES.items()}
    habits = {}
    for name, (window, slots, low, high) in _DEMAND_PROFILES.items():
        periods = tuple(sorted(rng.choice(list(window), size=slots, replace=False).tolist()))
        habits[name] = (periods, float(rng.uniform(low, high)))
    return UserArchetype(
        wifi_probs=wifi,
        cafe_lunch=bool(rng.random() < 0.6),
        gym_evening=bool(rng.random() < 0.5),
        demand_scale=float(np.exp(rng.normal(0.0, 0.6))),
        habits=habits,
    )


def _day_locations(arch: UserArchetype, rng: np.random.Generator, n: int) -> list[str]:
    """Routine weekday: home nights, commute, office, optional cafe/gym legs.

    The cafe and gym legs depend on the two preceding locations, which gives
    the mobility genuine second-order structure.
    """
    locs = [HOME] * n
    for k in range(9, min(10, n + 1)):
        locs[k - 1] = STREET
    for k in range(10, min(19, n + 1)):
        locs[k - 1] = WORK
    if arch.cafe_lunch and n >= 13 and locs[11] == WORK and locs[12 - 2] == WORK:
        if rng.random() < 0.85:
            locs[12] = CAFE  # period 13, conditioned on (work, work)
    if n >= 19:
        locs[18] = STREET
    if arch.gym_evening and n >= 21 and locs[17] == WORK:
        if rng.random() < 0.7:
            locs[18] = GYM  # replaces the commute leg after (work, work)
            locs[19] = GYM
    for k in range(21 if arch.gym_evening else 20, n + 1):
        locs[k - 1] = HOME
    # occasional irregular evening out
    if n >= 22 and rng.random() < 0.1:
        locs[21] = CAFE
    return locs


def generate_user(
    days: int,
    seed: int,
    n: int = 24,
    apps: Optional[dict[str, AppClass]] = None,
    archetype: Optional[UserArchetype] = None,
) -> list[DayTrace]:
    """One user's trace: `days` days of mobility, WiFi realizations, demand."""
    apps = apps or app_classes()
    rng = np.random.default_rng(seed)
    arch = archetype or _draw_archetype(rng)
    traces = []
    for d in range(days):
        locs = _day_locations(arch, rng, n)
        periods = []
        for k in range(1, n + 1):
            loc = locs[k - 1]
            wifi = bool(rng.random() < arch.wifi_probs[loc])
            usage = {}
            for name, (window, _, _, _) in _DEMAND_PROFILES.items():
                slots, mean = arch.habits[name]
                if k in slots:
                    active = rng.random() < _HABIT_PROB
                else:
                    active = k in window and rng.random() < _STRAY_PROB
                if active:
                    size = mean * float(np.exp(rng.normal(0.0, 0.25)))
                    if apps[name].kind is AppKind.FIXED_VOLUME:
                        size *= arch.demand_scale
                    usage[apps[name]] = round(size, 3)
            periods.append(PeriodRecord(location=loc, wifi_available=wifi, usage=usage))
        traces.append(DayTrace(day_index=d + 1, periods=periods))
    return traces


def generate_cohort(
    n_users: int,
    days: int,
    seed: int,
    n: int = 24,
    apps: Optional[dict[str, AppClass]] = None,
) -> dict[str, list[DayTrace]]:
    """A cohort of independent users with per-user seeds derived from `seed`."""
    users = {}
    for uid in range(n_users):
        name = f"user{uid:02d}"
        users[name] = generate_user(days, seed * 10_000 + uid, n=n, apps=apps)
    return users


# ---------------------------------------------------------------------------
# the encoded demand-spike scenario (afternoon spike, WiFi at 3pm and 7pm)

def spike_scenario(
    training_days: int = 3,
    n: int = 24,
    apps: Optional[dict[str, AppClass]] = None,
) -> list[DayTrace]:
    """Deterministic single-user trace for the afternoon-spike comparison.

    Hour h maps to period h+1.  WiFi is up only at 3pm (period 16, cafe) and
    7pm (period 20, home).  Demand runs from noon to 6pm with a large
    delay-tolerant spike at 1pm; the 3pm and 7pm periods themselves carry no
    demand, so opportunistic offloading moves nothing.
    """
    apps = apps or app_classes()
    locs = [STREET] * n
    locs[15] = CAFE  # 3pm
    locs[19] = HOME  # 7pm
    wifi = [k in (16, 20) for k in range(1, n + 1)]
    demand: dict[int, dict[str, float]] = {
        13: {"Browsing": 5.0},                      # noon
        14: {"Downloads": 80.0, "Email": 2.0},      # 1pm spike
        15: {"SocialNetworking": 10.0},             # 2pm
        17: {"Browsing": 5.0},                      # 4pm
        18: {"SocialNetworking": 8.0},              # 5pm
        19: {"Downloads": 20.0},                    # 6pm
    }
    days = []
    for d in range(training_days + 1):
        periods = []
        for k in range(1, n + 1):
            usage = {apps[name]: size for name, size in demand.get(k, {}).items()}
            periods.append(PeriodRecord(location=locs[k - 1], wifi_available=wifi[k - 1],
                                        usage=usage))
        days.append(DayTrace(day_index=d + 1, periods=periods))
    return days
