"""Trace-driven day-by-day simulation and cross-algorithm comparison.

The scheduler path follows the online loop: a start-of-day plan from the
initial WiFi/usage forecasts, then one re-solve per period with realized
spend deducted, forecasts refreshed from the observed locations, and pending
deferrals carried at their original origin.  WiFi realizations always come
from the trace, so every algorithm faces the identical environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .baselines import run_delayed, run_on_the_spot
from .config import SimConfig
from .optimizer import (
    BudgetState,
    CarriedGroup,
    Choice,
    OnlineObservation,
    PendingExecution,
    Schedule,
    best_single_choice,
    build_mmkp,
    build_mmkp_ext,
    online_step,
    per_period_select,
    solve_bruteforce,
    solve_lagrange,
)
from .records import ExecutionRecord, Network, make_record, realized_utility  # noqa: F401 (realized_utility re-exported)
from .trace import AppClass, DayTrace, PricingPlan, RateGrid
from .usage import DemandForecast, ObservedUsage, adjust_for_deferrals, forecast_usage
from .utility import UtilityParams, params_table
from .wifi import (
    MobilityHistory,
    WifiProfile,
    WifiForecast,
    fit_profile,
    initial_forecast,
    observe_current,
    update_forecast,
)

ALGORITHMS = ("amuse", "on-the-spot", "delayed")


@dataclass(frozen=True)
class SimContext:
    cfg: SimConfig
    apps: Mapping[str, AppClass]
    params: Mapping[str, UtilityParams]
    prices: PricingPlan
    grid: RateGrid
    ext_grid: RateGrid

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "SimContext":
        return cls(
            cfg=cfg,
            apps=cfg.apps(),
            params=params_table(cfg.utility_overrides),
            prices=cfg.plan(),
            grid=cfg.grid(),
            ext_grid=cfg.grid(extension=True),
        )


def day_class(day_index: int, split_weekends: bool) -> str:
    """Training-pool key for a day; 1-based day indices, weeks of 7."""
    if split_weekends and (day_index - 1) % 7 >= 5:
        return "weekend"
    return "weekday"


@dataclass
class UserState:
    profiles: dict[str, tuple[WifiProfile, MobilityHistory]]
    usage_hist: ObservedUsage
    budget: BudgetState
    monthly_budget: float
    split_weekends: bool = False

    @classmethod
    def from_training(cls, training: Sequence[DayTrace], ctx: SimContext,
                      monthly_budget: float) -> "UserState":
        split = ctx.cfg.weekday_weekend
        pools: dict[str, list[DayTrace]] = {}
        for day in training:
            pools.setdefault(day_class(day.day_index, split), []).append(day)
        profiles = {cls_: fit_profile(days) for cls_, days in pools.items()}
        usage = ObservedUsage(n=ctx.cfg.n)
        for day in training:
            sigma = {}
            for k, rec in enumerate(day.periods, start=1):
                for app, size in rec.usage.items():
                    if size > 0:
                        sigma[(k, app.name)] = sigma.get((k, app.name), 0.0) + size
            usage.add_day(sigma)
        return cls(
            profiles=profiles,
            usage_hist=usage,
            budget=BudgetState.for_day(monthly_budget, ctx.cfg.days_in_month),
            monthly_budget=monthly_budget,
            split_weekends=split,
        )

    def predictors_for(self, day: DayTrace) -> tuple[WifiProfile, MobilityHistory]:
        cls_ = day_class(day.day_index, self.split_weekends)
        if cls_ not in self.profiles:
            # no same-class training yet; fall back to whatever exists
            cls_ = sorted(self.profiles)[0]
        return self.profiles[cls_]

    def absorb_day(self, day: DayTrace) -> None:
        cls_ = day_class(day.day_index, self.split_weekends)
        if cls_ in self.profiles:
            profile, history = self.profiles[cls_]
            profile.add_day(day)
            history.add_day(day.locations())
        else:
            self.profiles[cls_] = fit_profile([day])


@dataclass
class DayResult:
    day_index: int
    records: list[ExecutionRecord]
    spend: float
    utility: float
    offloaded: float
    total_volume: float
    daily_budget: float
    overshoot: bool


def _day_totals(day: DayTrace) -> float:
    return sum(size for rec in day.periods for size in rec.usage.values())


def _summarize(day: DayTrace, records: list[ExecutionRecord], daily_budget: float) -> DayResult:
    spend = sum(r.spend for r in records)
    return DayResult(
        day_index=day.day_index,
        records=records,
        spend=spend,
        utility=sum(r.utility for r in records),
        offloaded=sum(r.volume for r in records if r.network is Network.WIFI),
        total_volume=_day_totals(day),
        daily_budget=daily_budget,
        overshoot=spend > daily_budget + 1e-9,
    )


def _fresh_demand(day: DayTrace, i: int) -> list[tuple[AppClass, float]]:
    rec = day.period(i)
    return [(app, rec.usage[app]) for app in sorted(rec.usage, key=lambda a: a.name)
            if rec.usage[app] > 0]


def run_day(state: UserState, day: DayTrace, ctx: SimContext,
            extension: bool = False, solver=solve_lagrange) -> DayResult:
    """One scheduler day: plan, execute period by period, re-solve online,
    then fold the (deferral-adjusted) observations back into the history."""
    cfg = ctx.cfg
    n = cfg.n
    day.validate(n)
    state.budget = BudgetState.for_day(
        max(0.0, state.budget.remaining_month), state.budget.days_left
    )
    profile, history = state.predictors_for(day)
    forecast = forecast_usage(state.usage_hist, cfg.window)
    wifi_fc = observe_current(
        initial_forecast(profile, history), 1, day.period(1).wifi_available
    )
    grid = ctx.ext_grid if extension else ctx.grid

    if extension:
        alpha = {k: wifi_fc.prob(k) * cfg.alpha_cap for k in range(1, n + 1)}
        problem = build_mmkp_ext(forecast, alpha, state.budget.remaining_daily, grid,
                                 ctx.prices, 1, n, ctx.apps, ctx.params)
    else:
        problem = build_mmkp(forecast, wifi_fc, state.budget.remaining_daily, grid,
                             ctx.prices, 1, n, ctx.apps, ctx.params)
    schedule = solver(problem)

    locations = day.locations()
    pending: dict[tuple[int, str], float] = {}
    records: list[ExecutionRecord] = []
    spend_prev = 0.0

    for i in range(1, n + 1):
        if i >= 2:
            carried = tuple(
                CarriedGroup(origin, app, size)
                for (origin, app), size in sorted(pending.items())
            )
            prev1 = locations[i - 2]
            prev2 = locations[i - 3] if i >= 3 else None
            wifi_now = day.period(i).wifi_available
            if extension:
                state.budget = state.budget.charge(spend_prev)
                wifi_fc = observe_current(
                    update_forecast(profile, history, i, prev2, prev1),
                    i, wifi_now,
                )
                alpha = {k: wifi_fc.prob(k) * cfg.alpha_cap for k in range(i, n + 1)}
                problem = build_mmkp_ext(forecast, alpha, state.budget.remaining_daily,
                                         grid, ctx.prices, i, n, ctx.apps, ctx.params,
                                         carried=carried)
                schedule = solver(problem, warm_start=schedule)
            else:
                obs = OnlineObservation(i, spend_prev, prev2, prev1, carried,
                                        wifi_now=wifi_now)
                state.budget, schedule, wifi_fc = online_step(
                    state.budget, schedule, obs, profile, history,
                    forecast, grid, ctx.prices, n, ctx.apps, ctx.params, solver=solver,
                )
            spend_prev = 0.0

        for app, size in _fresh_demand(day, i):
            pending[(i, app.name)] = pending.get((i, app.name), 0.0) + size

        wifi_up = day.period(i).wifi_available
        due: list[tuple[tuple[int, str], float, Optional[Choice]]] = []
        for key in sorted(pending):
            choice = schedule.assignment.get(key)
            if choice is None and key[0] == i:
                # demand the forecast missed: greedy single-group decision now;
                # a deferred pick is re-planned as a carried group next period
                choice = best_single_choice(key[0], ctx.apps[key[1]], pending[key],
                                            i, n, grid, wifi_fc,
                                            ctx.prices.unit_price, ctx.params[key[1]])
            if choice is not None and choice.k <= i:
                due.append((key, pending[key], choice))

        period_spend = 0.0
        if extension:
            period_records = _execute_period_ext(due, i, wifi_up, ctx, grid)
        else:
            period_records = _execute_period_base(
                due, i, wifi_up, ctx, grid,
                spent_today=state.budget.spent_today,
                daily_cap=state.budget.daily,
            )
        for rec_exec in period_records:
            records.append(rec_exec)
            period_spend += rec_exec.spend
        for key, _, _ in due:
            del pending[key]
        spend_prev = period_spend

    assert not pending, "deferrals may not cross the day boundary"
    state.budget = state.budget.charge(spend_prev)

    _fold_back_history(state, day, records, forecast, cfg)
    result = _summarize(day, records, state.budget.daily)
    state.budget = state.budget.end_day(state.monthly_budget, cfg.days_in_month)
    return result


def _execute_period_base(
    due: Sequence[tuple[tuple[int, str], float, Choice]],
    i: int,
    wifi_up: bool,
    ctx: SimContext,
    grid: RateGrid,
    spent_today: float,
    daily_cap: float,
) -> list[ExecutionRecord]:
    records = []
    exhausted = ctx.cfg.strict_budget and spent_today >= daily_cap - 1e-9
    for (origin, name), size, choice in due:
        app = ctx.apps[name]
        par = ctx.params[name]
        if wifi_up:
            records.append(make_record(app, par, origin, i, Network.WIFI, 1.0, size,
                                       ctx.prices.unit_price))
            continue
        gamma = min(grid.positive_gammas) if exhausted else choice.gamma
        records.append(make_record(app, par, origin, i, Network.CELLULAR, gamma, size,
                                   ctx.prices.unit_price))
    return records


def _execute_period_ext(
    due: Sequence[tuple[tuple[int, str], float, Optional[Choice]]],
    i: int,
    wifi_up: bool,
    ctx: SimContext,
    grid: RateGrid,
) -> list[ExecutionRecord]:
    """Appendix-style execution: a fresh per-period network/rate selection
    under the realized WiFi capacity."""
    if not due:
        return []
    alpha_now = ctx.cfg.alpha_cap if wifi_up else 0.0
    entries = [PendingExecution(origin, ctx.apps[name], size)
               for (origin, name), size, _ in due]
    final = per_period_select(entries, i, grid.beta, alpha_now, grid,
                              ctx.prices.unit_price, ctx.params)
    records = []
    for (origin, name), size, _ in due:
        app = ctx.apps[name]
        par = ctx.params[name]
        choice = final[(origin, name)]
        if choice.delta and choice.delta > 0:
            records.append(make_record(app, par, origin, i, Network.WIFI, choice.delta,
                                       size, ctx.prices.unit_price))
        else:
            records.append(make_record(app, par, origin, i, Network.CELLULAR, choice.gamma,
                                       size, ctx.prices.unit_price))
    return records


def _fold_back_history(state: UserState, day: DayTrace, records: list[ExecutionRecord],
                       forecast: DemandForecast, cfg: SimConfig) -> None:
    sigma_exec: dict[tuple[int, str], float] = {}
    deferrals = []
    for rec in records:
        key = (rec.executed, rec.app.name)
        sigma_exec[key] = sigma_exec.get(key, 0.0) + rec.size
        if rec.executed > rec.origin:
            deferrals.append((rec.origin, rec.app.name, rec.executed))
    if cfg.deferral_threshold is not None:
        deferrals = [
            (o, a, k) for (o, a, k) in deferrals
            if sigma_exec.get((o, a), 0.0) < cfg.deferral_threshold * forecast.size(o, a)
        ]
    adjusted = adjust_for_deferrals(sigma_exec, forecast, deferrals)
    state.usage_hist.add_day({k: v for k, v in adjusted.items() if v > 0})
    state.absorb_day(day)


def run_baseline_day(day: DayTrace, algorithm: str, ctx: SimContext) -> DayResult:
    fair = ctx.cfg.baseline_fair_share
    if algorithm == "on-the-spot":
        records = run_on_the_spot(day, ctx.prices, ctx.cfg.beta, ctx.params, fair)
    elif algorithm == "delayed":
        records = run_delayed(day, ctx.cfg.deadline, ctx.prices, ctx.cfg.beta,
                              ctx.params, fair)
    else:
        raise ValueError(f"unknown baseline {algorithm!r}")
    return _summarize(day, records, float("inf"))


# ---------------------------------------------------------------------------
# cohort trials

@dataclass
class UserTotals:
    utility: float = 0.0
    spend: float = 0.0
    offloaded: float = 0.0
    total_volume: float = 0.0
    overshoot_days: int = 0

    def add(self, day: DayResult) -> None:
        self.utility += day.utility
        self.spend += day.spend
        self.offloaded += day.offloaded
        self.total_volume += day.total_volume
        self.overshoot_days += int(day.overshoot)


@dataclass
class SimReport:
    algorithm: str
    seed: int
    config_hash: str
    users: dict[str, UserTotals]
    days: list[dict] = field(default_factory=list)

    def mean(self, metric: str) -> float:
        if not self.users:
            return 0.0
        return sum(getattr(t, metric) for t in self.users.values()) / len(self.users)


def draw_budgets(users: Sequence[str], cfg: SimConfig, seed: int) -> dict[str, float]:
    """Per-user monthly budgets, identical across algorithms for a given seed."""
    rng = np.random.default_rng(seed)
    budgets = {}
    for user in sorted(users):
        if cfg.budget.mode == "fixed":
            budgets[user] = cfg.monthly_budget
        else:  # truncated normal
            while True:
                draw = rng.normal(cfg.budget.mean, cfg.budget.sigma)
                if cfg.budget.low <= draw <= cfg.budget.high:
                    budgets[user] = float(draw)
                    break
    return budgets


def run_trial(
    traces: Mapping[str, Sequence[DayTrace]],
    cfg: SimConfig,
    algorithms: Sequence[str] = ALGORITHMS,
    seed: int = 0,
    extension: bool = False,
    solver=solve_lagrange,
) -> dict[str, SimReport]:
    """Train on the first W days, then replay the rest under each algorithm."""
    ctx = SimContext.from_config(cfg)
    w = cfg.window
    for user in sorted(traces):
        if len(traces[user]) < w + 1:
            raise ValueError(
                f"user {user!r} has {len(traces[user])} days; needs at least {w + 1}"
            )
    budgets = draw_budgets(list(traces), cfg, seed)

    reports = {}
    for algorithm in algorithms:
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        users: dict[str, UserTotals] = {}
        day_rows: list[dict] = []
        for user in sorted(traces):
            days = list(traces[user])
            training, evaluation = days[:w], days[w:]
            totals = UserTotals()
            if algorithm == "amuse":
                state = UserState.from_training(training, ctx, budgets[user])
                for day in evaluation:
                    result = run_day(state, day, ctx, extension=extension, solver=solver)
                    totals.add(result)
                    day_rows.append(_day_row(user, result))
            else:
                for day in evaluation:
                    result = run_baseline_day(day, algorithm, ctx)
                    totals.add(result)
                    day_rows.append(_day_row(user, result))
            users[user] = totals
        reports[algorithm] = SimReport(
            algorithm=algorithm,
            seed=seed,
            config_hash=cfg.hash(),
            users=users,
            days=day_rows,
        )
    return reports


def _day_row(user: str, result: DayResult) -> dict:
    return {
        "user": user,
        "day": result.day_index,
        "utility": result.utility,
        "spend": result.spend,
        "offloaded": result.offloaded,
        "total_volume": result.total_volume,
        "overshoot": int(result.overshoot),
    }


# ---------------------------------------------------------------------------
# perfect-information planning (dominance checks)

def plan_day_with_known_wifi(
    day: DayTrace,
    ctx: SimContext,
    budget: float,
    solver=solve_bruteforce,
) -> tuple[list[ExecutionRecord], Schedule]:
    """Single-shot plan with w set to the day's realized WiFi indicators and
    the true demand sizes; with 0/1 weights the planned objective equals the
    realized utility exactly."""
    n = day.n
    demands = {}
    for k in range(1, n + 1):
        for app, size in day.period(k).usage.items():
            if size > 0:
                demands[(k, app.name)] = size
    forecast = DemandForecast(window=1, s=demands)
    w = tuple(1.0 if rec.wifi_available else 0.0 for rec in day.periods)
    wifi = WifiForecast(as_of_period=1, w=w)
    problem = build_mmkp(forecast, wifi, budget, ctx.grid, ctx.prices, 1, n,
                         ctx.apps, ctx.params)
    schedule = solver(problem)
    records = []
    for (origin, name), choice in sorted(schedule.assignment.items()):
        app = ctx.apps[name]
        par = ctx.params[name]
        size = demands[(origin, name)]
        if day.period(choice.k).wifi_available:
            records.append(make_record(app, par, origin, choice.k, Network.WIFI, 1.0,
                                       size, ctx.prices.unit_price))
        else:
            records.append(make_record(app, par, origin, choice.k, Network.CELLULAR,
                                       choice.gamma, size, ctx.prices.unit_price))
    return records, schedule


# ---------------------------------------------------------------------------
# comparison

@dataclass
class UserGroupSplit:
    classification: dict[str, str]  # user -> "heavy" | "light"

    def members(self, group: str) -> list[str]:
        return sorted(u for u, g in self.classification.items() if g == group)


def split_users(demand_totals: Mapping[str, float]) -> UserGroupSplit:
    """Median split by total demand; the top half (even counts split evenly)
    is heavy."""
    order = sorted(demand_totals, key=lambda u: (-demand_totals[u], u))
    heavy_count = len(order) // 2
    classification = {u: ("heavy" if i < heavy_count else "light")
                      for i, u in enumerate(order)}
    return UserGroupSplit(classification)


def _ratio(baseline: float, amuse: float) -> float:
    if amuse == 0.0:
        return 1.0 if baseline == 0.0 else float("inf")
    return baseline / amuse


METRICS = ("utility", "spend", "offloaded")


@dataclass
class Comparison:
    reference: str
    ratios: dict[str, dict[str, dict[str, float]]]  # algo -> metric -> user -> ratio
    cdfs: dict[str, dict[str, list[tuple[float, float]]]]  # algo -> metric -> (value, F)
    groups: UserGroupSplit
    group_means: dict[str, dict[str, dict[str, float]]]  # algo -> metric -> group -> mean


def compare(reports: Mapping[str, SimReport], reference: str = "amuse") -> Comparison:
    """Per-user baseline/reference ratios, their empirical CDFs, and
    heavy/light group means."""
    if reference not in reports:
        raise ValueError(f"reference algorithm {reference!r} missing from reports")
    if len(reports) < 2:
        raise ValueError("need at least two algorithms to compare")
    ref = reports[reference]
    users = sorted(ref.users)
    for name, rep in reports.items():
        if sorted(rep.users) != users:
            raise ValueError(f"user sets differ between {reference!r} and {name!r}")

    groups = split_users({u: ref.users[u].total_volume for u in users})
    ratios: dict[str, dict[str, dict[str, float]]] = {}
    cdfs: dict[str, dict[str, list[tuple[float, float]]]] = {}
    group_means: dict[str, dict[str, dict[str, float]]] = {}
    for name, rep in reports.items():
        if name == reference:
            continue
        ratios[name] = {}
        cdfs[name] = {}
        group_means[name] = {}
        for metric in METRICS:
            per_user = {
                u: _ratio(getattr(rep.users[u], metric), getattr(ref.users[u], metric))
                for u in users
            }
            ratios[name][metric] = per_user
            values = sorted(per_user.values())
            m = len(values)
            cdfs[name][metric] = [(v, (i + 1) / m) for i, v in enumerate(values)]
            group_means[name][metric] = {}
            for group in ("heavy", "light"):
                members = groups.members(group)
                vals = [getattr(rep.users[u], metric) for u in members]
                group_means[name][metric][group] = (
                    sum(vals) / len(vals) if vals else math.nan
                )
    return Comparison(reference=reference, ratios=ratios, cdfs=cdfs, groups=groups,
                      group_means=group_means)
