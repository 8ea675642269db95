"""Deferral/rate scheduling as a multidimensional multiple-choice knapsack.

Each (origin period, app) pair with positive demand forms a group; the group
picks exactly one item (target period k >= origin, 3G rate gamma; the
network-selection extension adds WiFi-rate items).  Item values are expected
utilities; one budget row caps expected 3G spend for the day and one row per
period caps total assigned 3G bandwidth.  An exact enumerator serves as the
oracle; the production path is a multiplier-guided repair-and-improve
heuristic that supports warm starts for cheap intra-day re-solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .trace import AppClass, AppKind, PricingPlan, RateGrid
from .usage import DemandForecast
from .utility import UtilityParams, _utility
from .wifi import WifiForecast

FEAS_TOL = 1e-9
VAL_TOL = 1e-9

ROW_BUDGET = "budget"
ROW_3G = "capacity_3g"
ROW_WIFI = "capacity_wifi"


class InstanceTooLarge(Exception):
    """Brute-force guard tripped."""


def daily_budget(remaining: float, days_left: int) -> float:
    """Spread the remaining monthly budget over `days_left` days.

    B = (B_r / m) * exp(1 - 1/m): front-loaded for flexibility, and exactly
    B_r on the last day so the month's cap cannot be exceeded by plan.
    """
    if days_left < 1:
        raise ValueError("days_left must be >= 1")
    if remaining < 0:
        raise ValueError("remaining budget must be nonnegative")
    return (remaining / days_left) * math.exp(1.0 - 1.0 / days_left)


@dataclass(frozen=True)
class BudgetState:
    """Monthly budget bookkeeping: remaining cap, days left, today's slice."""

    remaining_month: float
    days_left: int
    daily: float
    spent_today: float = 0.0

    @classmethod
    def for_day(cls, remaining_month: float, days_left: int) -> "BudgetState":
        return cls(remaining_month, days_left, daily_budget(max(0.0, remaining_month), days_left))

    @property
    def remaining_daily(self) -> float:
        return self.daily - self.spent_today

    def charge(self, amount: float) -> "BudgetState":
        if amount < 0:
            raise ValueError("spend must be nonnegative")
        return replace(self, spent_today=self.spent_today + amount)

    def end_day(self, monthly_budget: float, days_in_month: int) -> "BudgetState":
        b_r = self.remaining_month - self.spent_today
        m = self.days_left - 1
        if m < 1:  # billing rollover
            return BudgetState.for_day(monthly_budget, days_in_month)
        return BudgetState.for_day(max(0.0, b_r), m)


@dataclass(frozen=True)
class Row:
    kind: str
    bound: float
    period: Optional[int] = None

    def label(self) -> str:
        return self.kind if self.period is None else f"{self.kind}[{self.period}]"


@dataclass(frozen=True)
class Choice:
    """One item: execute at period k, 3G rate gamma (WiFi rate delta in the
    extension; None means the base always-prefer-WiFi model)."""

    k: int
    gamma: float
    delta: Optional[float] = None


@dataclass
class Group:
    origin: int
    app: str
    size: float
    choices: list[Choice]
    values: np.ndarray
    weights: np.ndarray  # (n_rows, n_items)

    @property
    def key(self) -> tuple[int, str]:
        return (self.origin, self.app)

    def choice_index(self, choice: Choice) -> Optional[int]:
        try:
            return self.choices.index(choice)
        except ValueError:
            return None


@dataclass
class MmkpProblem:
    rows: list[Row]
    groups: list[Group]

    @property
    def bounds(self) -> np.ndarray:
        return np.array([row.bound for row in self.rows], dtype=float)

    def combination_count(self) -> int:
        count = 1
        for g in self.groups:
            count *= len(g.choices)
        return count


@dataclass(frozen=True)
class Schedule:
    """One chosen item per group, with feasibility bookkeeping."""

    assignment: dict[tuple[int, str], Choice]
    objective: float
    feasible: bool
    row_lhs: tuple[float, ...]
    row_ok: tuple[bool, ...]
    flags: frozenset[str] = frozenset()

    def slack(self, problem: MmkpProblem) -> tuple[float, ...]:
        return tuple(row.bound - lhs for row, lhs in zip(problem.rows, self.row_lhs))


def _evaluate(problem: MmkpProblem, idx: Sequence[int]) -> tuple[float, np.ndarray]:
    obj = 0.0
    lhs = np.zeros(len(problem.rows))
    for g, j in zip(problem.groups, idx):
        obj += float(g.values[j])
        if len(problem.rows):
            lhs += g.weights[:, j]
    return obj, lhs


def _feasible(problem: MmkpProblem, lhs: np.ndarray) -> bool:
    return bool(np.all(lhs <= problem.bounds + FEAS_TOL))


def _schedule_from(problem: MmkpProblem, idx: Sequence[int], flags: Iterable[str] = ()) -> Schedule:
    obj, lhs = _evaluate(problem, idx)
    ok = tuple(bool(v <= row.bound + FEAS_TOL) for row, v in zip(problem.rows, lhs))
    return Schedule(
        assignment={g.key: g.choices[j] for g, j in zip(problem.groups, idx)},
        objective=obj,
        feasible=all(ok),
        row_lhs=tuple(float(v) for v in lhs),
        row_ok=ok,
        flags=frozenset(flags),
    )


EMPTY_SCHEDULE = Schedule(assignment={}, objective=0.0, feasible=True, row_lhs=(), row_ok=())


# ---------------------------------------------------------------------------
# problem construction

@dataclass(frozen=True)
class CarriedGroup:
    """A not-yet-executed deferral carried into a re-solve; the size is the
    demand observed at its (past) origin period."""

    origin: int
    app: str
    size: float


def _wifi_vector(wifi: WifiForecast, i: int, n: int) -> np.ndarray:
    w = np.array([wifi.prob(k) for k in range(i, n + 1)], dtype=float)
    if np.any((w < 0) | (w > 1)):
        raise ValueError("WiFi probabilities must lie in [0, 1]")
    return w


def _group_base(
    origin: int,
    app: AppClass,
    size: float,
    start: int,
    n: int,
    gammas: Sequence[float],
    w: np.ndarray,
    price: float,
    params: UtilityParams,
) -> tuple[list[Choice], np.ndarray, np.ndarray, np.ndarray]:
    """Item grid for the base model: (k, gamma) in lexicographic order.

    Returns (choices, values, budget coefficients, 3g rate per item).
    """
    ks = np.arange(start, n + 1)
    t = (ks - origin).astype(float)
    g = np.asarray(gammas, dtype=float)
    wk = w[ks - start]  # caller passes the slice aligned at `start`

    if app.kind is AppKind.FIXED_TIME:
        u_wifi = params.C * np.exp(-params.mu * t)  # r=1 cancels the -nu term
        u_3g = (
            params.C * np.exp(-params.nu + g[None, :] * params.nu - params.mu * t[:, None])
            - params.eta * price * g[None, :] * size
        )
        spend = price * g[None, :] * size * np.ones_like(t)[:, None]
    else:
        u_wifi = params.C * np.exp(-size * params.nu - params.mu * t)
        u_3g = (
            params.C * np.exp(-(size / g[None, :]) * params.nu - params.mu * t[:, None])
            - params.eta * price * size
        )
        spend = price * size * np.ones((len(ks), len(g)))

    values = wk[:, None] * u_wifi[:, None] + (1.0 - wk[:, None]) * u_3g
    budget_coef = (1.0 - wk[:, None]) * spend
    choices = [Choice(int(k), float(gam)) for k in ks for gam in g]
    rates = np.tile(g, len(ks))
    return choices, values.ravel(), budget_coef.ravel(), rates


def build_mmkp(
    forecast: DemandForecast,
    wifi: WifiForecast,
    budget: float,
    grid: RateGrid,
    prices: PricingPlan,
    i: int,
    n: int,
    apps: Mapping[str, AppClass],
    params: Mapping[str, UtilityParams],
    carried: Iterable[CarriedGroup] = (),
) -> MmkpProblem:
    """Assemble the day's deferral/rate problem for periods i..n.

    Carried groups keep their original origin so the delay term keeps
    counting from the period the demand actually arrived.  Capacity rows are
    omitted for periods with w = 1 (everything completes over WiFi there, so
    any 3G rate choice is vacuous).
    """
    w = _wifi_vector(wifi, i, n)
    gammas = grid.positive_gammas

    specs: list[tuple[int, str, float]] = []
    for cg in carried:
        if cg.origin >= i:
            raise ValueError("carried groups must originate before the current period")
        if cg.size > 0:
            specs.append((cg.origin, cg.app, cg.size))
    for (k, name), size in forecast.s.items():
        if k >= i and size > 0:
            specs.append((k, name, size))
    specs.sort()

    cap_periods = [l for l in range(i, n + 1) if w[l - i] < 1.0 - FEAS_TOL]
    rows = [Row(ROW_BUDGET, budget)] + [Row(ROW_3G, grid.beta, period=l) for l in cap_periods]
    row_of_period = {l: 1 + j for j, l in enumerate(cap_periods)}

    groups = []
    for origin, name, size in specs:
        app = apps[name]
        start = max(origin, i)
        choices, values, budget_coef, rates = _group_base(
            origin, app, size, start, n, gammas, w[start - i :], prices.unit_price, params[name]
        )
        weights = np.zeros((len(rows), len(choices)))
        weights[0] = budget_coef
        for j, choice in enumerate(choices):
            r = row_of_period.get(choice.k)
            if r is not None:
                weights[r, j] = rates[j]
        groups.append(Group(origin, name, size, choices, values, weights))
    return MmkpProblem(rows=rows, groups=groups)


def build_mmkp_ext(
    forecast: DemandForecast,
    alpha: Mapping[int, float],
    budget: float,
    grid: RateGrid,
    prices: PricingPlan,
    i: int,
    n: int,
    apps: Mapping[str, AppClass],
    params: Mapping[str, UtilityParams],
    carried: Iterable[CarriedGroup] = (),
) -> MmkpProblem:
    """Network-selection variant: items pick 3G *or* WiFi at an explicit rate.

    Items are (k, gamma, 0) valued at the 3G utility and (k, 0, delta) valued
    at the WiFi utility; grids contain 0 only to express "interface unused",
    so no (k, 0, 0) item exists.  Budget and 3G rows touch only gamma items;
    per-period WiFi rows bound delta items by the predicted WiFi bandwidth
    alpha(l).
    """
    if 0.0 not in grid.gamma_set or (grid.delta_set and 0.0 not in grid.delta_set):
        raise ValueError("extension grids must include 0")
    gammas = grid.positive_gammas
    deltas = grid.positive_deltas
    if not deltas:
        raise ValueError("extension needs at least one positive WiFi rate")

    specs: list[tuple[int, str, float]] = []
    for cg in carried:
        if cg.origin >= i:
            raise ValueError("carried groups must originate before the current period")
        if cg.size > 0:
            specs.append((cg.origin, cg.app, cg.size))
    for (k, name), size in forecast.s.items():
        if k >= i and size > 0:
            specs.append((k, name, size))
    specs.sort()

    periods = list(range(i, n + 1))
    rows = [Row(ROW_BUDGET, budget)]
    rows += [Row(ROW_3G, grid.beta, period=l) for l in periods]
    rows += [Row(ROW_WIFI, float(alpha.get(l, 0.0)), period=l) for l in periods]
    row_3g = {l: 1 + j for j, l in enumerate(periods)}
    row_wifi = {l: 1 + len(periods) + j for j, l in enumerate(periods)}

    groups = []
    for origin, name, size in specs:
        app = apps[name]
        par = params[name]
        start = max(origin, i)
        choices: list[Choice] = []
        values: list[float] = []
        cols: list[np.ndarray] = []
        for k in range(start, n + 1):
            t = k - origin
            for delta in deltas:
                choices.append(Choice(k, 0.0, delta))
                values.append(_utility(par, app.kind, 0.0, t, delta, size))
                col = np.zeros(len(rows))
                col[row_wifi[k]] = delta
                cols.append(col)
            for gamma in gammas:
                choices.append(Choice(k, gamma, 0.0))
                values.append(_utility(par, app.kind, prices.unit_price, t, gamma, size))
                col = np.zeros(len(rows))
                col[0] = (
                    prices.unit_price * gamma * size
                    if app.kind is AppKind.FIXED_TIME
                    else prices.unit_price * size
                )
                col[row_3g[k]] = gamma
                cols.append(col)
        order = sorted(range(len(choices)), key=lambda j: (choices[j].k, choices[j].gamma, choices[j].delta))
        groups.append(
            Group(
                origin,
                name,
                size,
                [choices[j] for j in order],
                np.array([values[j] for j in order]),
                np.column_stack([cols[j] for j in order]) if choices else np.zeros((len(rows), 0)),
            )
        )
    return MmkpProblem(rows=rows, groups=groups)


def best_single_choice(
    origin: int,
    app: AppClass,
    size: float,
    i: int,
    n: int,
    grid: RateGrid,
    wifi: WifiForecast,
    price: float,
    params: UtilityParams,
) -> Choice:
    """Constraint-free argmax item for one group (used for demand the day's
    plan did not anticipate; a deferred choice gets re-planned next period)."""
    w = _wifi_vector(wifi, i, n)
    start = max(origin, i)
    choices, values, _, _ = _group_base(
        origin, app, size, start, n, grid.positive_gammas, w[start - i :], price, params
    )
    top = values.max()
    return choices[int(np.argmax(values >= top - VAL_TOL))]


# ---------------------------------------------------------------------------
# solvers

BRUTE_FORCE_LIMIT = 10**7


def solve_bruteforce(problem: MmkpProblem) -> Schedule:
    """Exact enumeration oracle; ties go to the lexicographically smallest
    assignment vector (groups in problem order, items in listed order)."""
    if not problem.groups:
        return EMPTY_SCHEDULE
    sizes = [len(g.choices) for g in problem.groups]
    if any(s == 0 for s in sizes):
        raise ValueError("every group needs at least one item")
    total = problem.combination_count()
    if total > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"{total} combinations exceed the enumeration guard")

    shape = tuple(sizes)

    def broadcast(vecs: list[np.ndarray]) -> np.ndarray:
        acc = np.zeros(shape)
        for dim, vec in enumerate(vecs):
            view = [1] * len(shape)
            view[dim] = shape[dim]
            acc = acc + vec.reshape(view)
        return acc

    value = broadcast([g.values for g in problem.groups])
    mask = np.ones(shape, dtype=bool)
    for r, row in enumerate(problem.rows):
        lhs = broadcast([g.weights[r] for g in problem.groups])
        mask &= lhs <= row.bound + FEAS_TOL
    if not mask.any():
        return Schedule(
            assignment={},
            objective=float("-inf"),
            feasible=False,
            row_lhs=(),
            row_ok=(),
            flags=frozenset({"no_feasible_assignment"}),
        )
    best = value[mask].max()
    tie = mask & (value >= best - VAL_TOL)
    flat = int(np.argmax(tie.ravel()))  # first True in C order == lex order
    idx = list(np.unravel_index(flat, shape))
    return _schedule_from(problem, idx)


def _argmax_start(problem: MmkpProblem) -> list[int]:
    idx = []
    for g in problem.groups:
        top = g.values.max()
        idx.append(int(np.argmax(g.values >= top - VAL_TOL)))
    return idx


def _map_warm_start(problem: MmkpProblem, warm: Schedule) -> Optional[list[int]]:
    idx = []
    for g in problem.groups:
        choice = warm.assignment.get(g.key)
        if choice is None:
            return None
        j = g.choice_index(choice)
        if j is None:
            return None
        idx.append(j)
    return idx


def _violations(problem: MmkpProblem, lhs: np.ndarray) -> list[tuple[int, float]]:
    out = []
    for r, row in enumerate(problem.rows):
        v = lhs[r] - row.bound
        if v > FEAS_TOL:
            out.append((r, v / max(row.bound, FEAS_TOL)))
    return out


def _violation_total(problem: MmkpProblem, lhs: np.ndarray) -> float:
    total = 0.0
    for r, row in enumerate(problem.rows):
        over = lhs[r] - row.bound
        if over > FEAS_TOL:
            total += over / max(abs(row.bound), 1.0)
    return total


def _totals_for_columns(lhs_cols: np.ndarray, bounds: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Normalized overload for each candidate column of lhs values."""
    over = lhs_cols - bounds[:, None]
    over[over <= FEAS_TOL] = 0.0
    return (over / scales[:, None]).sum(axis=0)


_PAIR_SEARCH_LIMIT = 400  # total item count above which 2-swaps are skipped


def _violation_descent(problem: MmkpProblem, idx: list[int], max_iter: int) -> list[int]:
    """Best-improvement descent on total (violation-weighted) overload.

    Single-group swaps first; when they stall on a small instance, try pairs
    of swaps.  The metric strictly decreases, so the walk cannot cycle.
    """
    if not problem.rows:
        return list(idx)
    idx = list(idx)
    bounds = problem.bounds
    scales = np.maximum(np.abs(bounds), 1.0)
    _, lhs = _evaluate(problem, idx)
    total = _violation_total(problem, lhs)
    n_items = sum(len(g.choices) for g in problem.groups)
    for _ in range(max_iter):
        if total <= 0.0:
            break
        best = None  # (new_total, gi, j)
        for gi, g in enumerate(problem.groups):
            cur = idx[gi]
            cand_lhs = lhs[:, None] + g.weights - g.weights[:, [cur]]
            totals = _totals_for_columns(cand_lhs, bounds, scales)
            totals[cur] = np.inf
            j = int(np.argmin(totals))
            if totals[j] < total - FEAS_TOL and (best is None or totals[j] < best[0] - FEAS_TOL):
                best = (float(totals[j]), gi, j)
        pair = None
        if best is None and n_items <= _PAIR_SEARCH_LIMIT and len(problem.groups) >= 2:
            pair = _pair_rescue(problem, idx, lhs, total, bounds, scales)
        if best is not None:
            total, gi, j = best
            g = problem.groups[gi]
            lhs = lhs + g.weights[:, j] - g.weights[:, idx[gi]]
            idx[gi] = j
        elif pair is not None:
            total, g1, j1, g2, j2 = pair
            lhs = (
                lhs
                + problem.groups[g1].weights[:, j1]
                - problem.groups[g1].weights[:, idx[g1]]
                + problem.groups[g2].weights[:, j2]
                - problem.groups[g2].weights[:, idx[g2]]
            )
            idx[g1] = j1
            idx[g2] = j2
        else:
            break
    return idx


def _pair_rescue(problem: MmkpProblem, idx: list[int], lhs: np.ndarray, total: float,
                 bounds: np.ndarray, scales: np.ndarray):
    """One coordinated two-group swap that strictly reduces total overload."""
    n = len(problem.groups)
    for g1 in range(n):
        grp1 = problem.groups[g1]
        cur1 = idx[g1]
        for j1 in range(len(grp1.choices)):
            if j1 == cur1:
                continue
            lhs1 = lhs + grp1.weights[:, j1] - grp1.weights[:, cur1]
            for g2 in range(g1 + 1, n):
                grp2 = problem.groups[g2]
                cur2 = idx[g2]
                cand_lhs = lhs1[:, None] + grp2.weights - grp2.weights[:, [cur2]]
                totals = _totals_for_columns(cand_lhs, bounds, scales)
                totals[cur2] = np.inf
                j2 = int(np.argmin(totals))
                if totals[j2] < total - FEAS_TOL:
                    return (float(totals[j2]), g1, j1, g2, j2)
    return None


def _provably_infeasible(problem: MmkpProblem) -> bool:
    """True when some row cannot be satisfied even by per-group minima.

    Sound but not complete: per-row minima ignore cross-row coupling, so a
    False answer proves nothing.
    """
    for r, row in enumerate(problem.rows):
        low = sum(float(g.weights[r].min()) for g in problem.groups)
        if low > row.bound + FEAS_TOL:
            return True
    return False


def _min_footprint_idx(problem: MmkpProblem, row: Optional[int] = None) -> list[int]:
    """Per-group item with the lightest (normalized) constraint footprint,
    either over all rows or over one row."""
    scales = np.array([max(abs(r.bound), 1.0) for r in problem.rows])
    idx = []
    for g in problem.groups:
        if len(problem.rows) == 0:
            idx.append(0)
            continue
        if row is None:
            load = (g.weights / scales[:, None]).sum(axis=0)
        else:
            load = g.weights[row]
        best = load.min()
        # lightest load; ties go to the higher value, then to item order
        cand = np.nonzero(load <= best + FEAS_TOL)[0]
        top = g.values[cand].max()
        idx.append(int(cand[np.argmax(g.values[cand] >= top - VAL_TOL)]))
    return idx


def _repair_phase(problem: MmkpProblem, idx: list[int], max_iter: int) -> list[int]:
    """Drive the assignment toward feasibility one swap at a time.

    Each iteration targets the relatively-most-violated row (ties: lowest
    index) and applies the single-group swap with the smallest objective loss
    per unit of violation reduced.
    """
    _, lhs = _evaluate(problem, idx)
    seen = {tuple(idx)}
    for _ in range(max_iter):
        viol = _violations(problem, lhs)
        if not viol:
            break
        r = max(viol, key=lambda rv: (rv[1], -rv[0]))[0]
        best = None
        for gi, g in enumerate(problem.groups):
            cur = idx[gi]
            red = g.weights[r, cur] - g.weights[r]
            ok = red > FEAS_TOL
            if not ok.any():
                continue
            loss = g.values[cur] - g.values
            ratio = np.where(ok, loss / np.where(ok, red, 1.0), np.inf)
            j = int(np.argmin(ratio))
            key = (float(ratio[j]), float(loss[j]), gi, j)
            if best is None or key < best:
                best = key
        if best is None:
            break
        _, _, gi, j = best
        g = problem.groups[gi]
        lhs = lhs + g.weights[:, j] - g.weights[:, idx[gi]]
        idx[gi] = j
        state = tuple(idx)
        if state in seen:
            break
        seen.add(state)
    return idx


def _improve_phase(problem: MmkpProblem, idx: list[int], max_iter: int = 10_000) -> list[int]:
    """Feasibility-preserving 1-opt: apply the best single-group upgrade until
    no swap improves the objective."""
    bounds = problem.bounds
    _, lhs = _evaluate(problem, idx)
    for _ in range(max_iter):
        best = None
        best_gain = 0.0
        for gi, g in enumerate(problem.groups):
            cur = idx[gi]
            gains = g.values - g.values[cur]
            cand = np.nonzero(gains > max(VAL_TOL, best_gain))[0]
            if cand.size == 0:
                continue
            delta = g.weights[:, cand] - g.weights[:, [cur]]
            ok = np.all(lhs[:, None] + delta <= bounds[:, None] + FEAS_TOL, axis=0)
            for pos in np.nonzero(ok)[0]:
                j = int(cand[pos])
                gain = float(gains[j])
                # strictly-greater keeps the earliest (group, item) on ties
                if best is None or gain > best_gain + VAL_TOL:
                    best_gain = gain
                    best = (gi, j)
        if best is None:
            break
        gi, j = best
        g = problem.groups[gi]
        lhs = lhs + g.weights[:, j] - g.weights[:, idx[gi]]
        idx[gi] = j
    return idx


def _capacity_scale_down(problem: MmkpProblem, idx: list[int]) -> list[int]:
    """Walk assigned rates down the grid under violated capacity rows.

    Rates are scaled proportionally to fit the bound and floored to the grid
    (two groups at rate 1 under a cap of 1 both land on 0.5); leftover slack
    is then handed back greedily in descending value-density order.
    """
    idx = list(idx)
    _, lhs = _evaluate(problem, idx)
    for r, row in enumerate(problem.rows):
        if row.kind == ROW_BUDGET or lhs[r] <= row.bound + FEAS_TOL:
            continue
        affected = []
        total = 0.0
        for gi, g in enumerate(problem.groups):
            rate = float(g.weights[r, idx[gi]])
            if rate > 0:
                density = float(g.values[idx[gi]]) / rate
                affected.append((-density, gi, rate))
                total += rate
        factor = row.bound / total if total > 0 else 0.0
        assigned: dict[int, tuple[float, int]] = {}
        for _, gi, rate in sorted(affected):
            g = problem.groups[gi]
            k = g.choices[idx[gi]].k
            same_k = sorted(
                (float(g.weights[r, j]), j)
                for j, c in enumerate(g.choices)
                if c.k == k and g.weights[r, j] > 0
            )
            target = rate * factor
            floor = [(rr, j) for rr, j in same_k if rr <= target + FEAS_TOL]
            assigned[gi] = floor[-1] if floor else same_k[0]
        slack = row.bound - sum(rr for rr, _ in assigned.values())
        if slack > FEAS_TOL:
            for _, gi, _ in sorted(affected):
                g = problem.groups[gi]
                cur_rate, cur_j = assigned[gi]
                k = g.choices[cur_j].k
                upgrades = sorted(
                    (float(g.weights[r, j]), j)
                    for j, c in enumerate(g.choices)
                    if c.k == k and g.weights[r, j] > cur_rate + FEAS_TOL
                    and g.weights[r, j] <= cur_rate + slack + FEAS_TOL
                )
                if upgrades:
                    new_rate, new_j = upgrades[-1]
                    slack -= new_rate - cur_rate
                    assigned[gi] = (new_rate, new_j)
        for gi, (_, j) in assigned.items():
            idx[gi] = j
        _, lhs = _evaluate(problem, idx)
    return idx


def _worst_case_idx(problem: MmkpProblem) -> list[int]:
    """Every group at its earliest period with the lowest positive 3G rate."""
    idx = []
    for g in problem.groups:
        start = min(c.k for c in g.choices)
        threeg = [(c.gamma, j) for j, c in enumerate(g.choices) if c.k == start and c.gamma > 0]
        if threeg:
            idx.append(min(threeg)[1])
        else:  # extension group with only WiFi items at the start period
            idx.append(min((c.delta or 0.0, j) for j, c in enumerate(g.choices) if c.k == start)[1])
    return idx


def repair_infeasible(problem: MmkpProblem, schedule: Schedule) -> Schedule:
    """Last-resort repair per the stated fallback rules.

    Capacity-only violations: scale assigned rates down the grid.  Anything
    involving the budget row: restart from the worst case (everything now at
    the lowest bandwidth), then fix capacity; a budget row still violated
    after that is flagged.
    """
    idx = _map_warm_start(problem, schedule)
    if idx is None:
        idx = _argmax_start(problem)
    _, lhs = _evaluate(problem, idx)
    viol_rows = [problem.rows[r].kind for r, _ in _violations(problem, lhs)]
    if not viol_rows:
        return _schedule_from(problem, idx)
    flags = set()
    if all(kind != ROW_BUDGET for kind in viol_rows):
        idx = _capacity_scale_down(problem, idx)
        flags.add("capacity_scaled_down")
    else:
        idx = _worst_case_idx(problem)
        idx = _capacity_scale_down(problem, idx)
        flags.add("worst_case_fallback")
    _, lhs = _evaluate(problem, idx)
    for r, _ in _violations(problem, lhs):
        if problem.rows[r].kind == ROW_BUDGET:
            flags.add("budget_violated_after_fallback")
        else:
            flags.add("capacity_violated_after_fallback")
    return _schedule_from(problem, idx, flags)


def solve_lagrange(problem: MmkpProblem, warm_start: Optional[Schedule] = None) -> Schedule:
    """Multiplier-guided heuristic: seed, repair to feasibility, 1-opt improve.

    A feasible warm start skips the repair work entirely, which is what makes
    intra-day re-solves cheap.  Otherwise the per-group unconstrained argmax
    is repaired, first by most-violated-row swaps, then (if needed) by a
    violation-weighted descent from several deterministic starts.  Always
    returns a schedule; when even the fallback cannot restore feasibility the
    result carries flags saying what still violates.
    """
    if not problem.groups:
        return EMPTY_SCHEDULE
    max_iter = max(200, 20 * sum(len(g.choices) for g in problem.groups))

    if warm_start is not None:
        mapped = _map_warm_start(problem, warm_start)
        if mapped is not None:
            _, lhs = _evaluate(problem, mapped)
            if _feasible(problem, lhs):
                idx = _improve_phase(problem, mapped)
                return _schedule_from(problem, idx, {"warm_start", "improved"})

    idx = _argmax_start(problem)
    _, lhs = _evaluate(problem, idx)
    if _feasible(problem, lhs):
        idx = _improve_phase(problem, idx)
        return _schedule_from(problem, idx, {"improved"})

    if _provably_infeasible(problem):
        fallback = repair_infeasible(problem, _schedule_from(problem, idx))
        return Schedule(
            assignment=fallback.assignment,
            objective=fallback.objective,
            feasible=fallback.feasible,
            row_lhs=fallback.row_lhs,
            row_ok=fallback.row_ok,
            flags=fallback.flags | {"infeasible_instance"},
        )

    repaired = _repair_phase(problem, list(idx), max_iter)
    _, lhs = _evaluate(problem, repaired)
    if _feasible(problem, lhs):
        idx = _improve_phase(problem, repaired)
        return _schedule_from(problem, idx, {"repaired", "improved"})

    # the greedy repair stalled; restart the descent from deterministic seeds
    starts = [repaired, _worst_case_idx(problem), _min_footprint_idx(problem)]
    starts += [_min_footprint_idx(problem, row=r) for r in range(len(problem.rows))]
    outcomes: list[tuple[float, int, list[int]]] = []
    tried: set[tuple[int, ...]] = set()
    for order, start in enumerate(starts):
        key = tuple(start)
        if key in tried:
            continue
        tried.add(key)
        cand = _violation_descent(problem, start, max_iter=100)
        _, lhs = _evaluate(problem, cand)
        if _feasible(problem, lhs):
            best = _improve_phase(problem, cand)
            obj, _ = _evaluate(problem, best)
            outcomes.append((obj, -order, best))
    if outcomes:
        _, _, idx = max(outcomes)
        return _schedule_from(problem, idx, {"repaired", "improved"})

    fallback = repair_infeasible(problem, _schedule_from(problem, repaired))
    return Schedule(
        assignment=fallback.assignment,
        objective=fallback.objective,
        feasible=fallback.feasible,
        row_lhs=fallback.row_lhs,
        row_ok=fallback.row_ok,
        flags=fallback.flags | {"repair_failed"},
    )


# ---------------------------------------------------------------------------
# online refinement

@dataclass(frozen=True)
class OnlineObservation:
    """What period i's re-solve gets to see: last period's realized 3G spend,
    the two most recent observed locations, the (directly observable) current
    WiFi state, and not-yet-executed deferrals."""

    period: int
    spend_prev: float
    prev2: Optional[str]
    prev1: Optional[str]
    carried: tuple[CarriedGroup, ...] = ()
    wifi_now: Optional[bool] = None


def online_step(
    state: BudgetState,
    schedule: Optional[Schedule],
    obs: OnlineObservation,
    profile,
    history,
    forecast: DemandForecast,
    grid: RateGrid,
    prices: PricingPlan,
    n: int,
    apps: Mapping[str, AppClass],
    params: Mapping[str, UtilityParams],
    solver=solve_lagrange,
) -> tuple[BudgetState, Schedule, WifiForecast]:
    """Online step for period i >= 2: charge last period's spend, refresh the
    WiFi forecast (folding in the observed current connectivity), rebuild the
    remaining-day problem, re-solve warm-started."""
    from .wifi import observe_current, update_forecast

    if not 2 <= obs.period <= n:
        raise ValueError("online steps run for periods 2..n")
    state = state.charge(obs.spend_prev)
    wifi = update_forecast(profile, history, obs.period, obs.prev2, obs.prev1)
    if obs.wifi_now is not None:
        wifi = observe_current(wifi, obs.period, obs.wifi_now)
    problem = build_mmkp(
        forecast,
        wifi,
        state.remaining_daily,
        grid,
        prices,
        obs.period,
        n,
        apps,
        params,
        carried=obs.carried,
    )
    new_schedule = solver(problem, warm_start=schedule)
    return state, new_schedule, wifi


# ---------------------------------------------------------------------------
# per-period network selection (extension)

@dataclass(frozen=True)
class PendingExecution:
    origin: int
    app: AppClass
    size: float


def per_period_select(
    entries: Sequence[PendingExecution],
    k: int,
    beta: float,
    alpha_k: float,
    grid: RateGrid,
    price: float,
    params: Mapping[str, UtilityParams],
) -> dict[tuple[int, str], Choice]:
    """Choose the final (network, rate) for everything scheduled to period k.

    Maximizes summed utility under the period's 3G cap and WiFi capacity
    alpha(k); if the heuristic cannot restore feasibility the assigned rates
    are walked down the grid.
    """
    gammas = grid.positive_gammas
    deltas = grid.positive_deltas
    rows = [Row(ROW_3G, beta, period=k), Row(ROW_WIFI, alpha_k, period=k)]
    groups = []
    for e in sorted(entries, key=lambda e: (e.origin, e.app.name)):
        t = k - e.origin
        par = params[e.app.name]
        choices: list[Choice] = []
        values: list[float] = []
        cols: list[list[float]] = []
        for delta in deltas:
            choices.append(Choice(k, 0.0, delta))
            values.append(_utility(par, e.app.kind, 0.0, t, delta, e.size))
            cols.append([0.0, delta])
        for gamma in gammas:
            choices.append(Choice(k, gamma, 0.0))
            values.append(_utility(par, e.app.kind, price, t, gamma, e.size))
            cols.append([gamma, 0.0])
        order = sorted(range(len(choices)), key=lambda j: (choices[j].gamma, choices[j].delta))
        groups.append(
            Group(
                e.origin,
                e.app.name,
                e.size,
                [choices[j] for j in order],
                np.array([values[j] for j in order]),
                np.array([cols[j] for j in order]).T,
            )
        )
    problem = MmkpProblem(rows=rows, groups=groups)
    schedule = solve_lagrange(problem)
    if not schedule.feasible:
        schedule = repair_infeasible(problem, schedule)
    return dict(schedule.assignment)


# ---------------------------------------------------------------------------
# problem / schedule JSON

def problem_to_json(problem: MmkpProblem) -> dict:
    return {
        "rows": [
            {"kind": row.kind, "bound": row.bound, **({"period": row.period} if row.period is not None else {})}
            for row in problem.rows
        ],
        "groups": [
            {
                "origin": g.origin,
                "app": g.app,
                "size": g.size,
                "items": [
                    {
                        "k": c.k,
                        "gamma": c.gamma,
                        **({"delta": c.delta} if c.delta is not None else {}),
                        "value": float(g.values[j]),
                        "weights": [float(x) for x in g.weights[:, j]],
                    }
                    for j, c in enumerate(g.choices)
                ],
            }
            for g in problem.groups
        ],
    }


def problem_from_json(data: Mapping) -> MmkpProblem:
    rows = [Row(r["kind"], float(r["bound"]), r.get("period")) for r in data["rows"]]
    groups = []
    for gd in data["groups"]:
        items = gd["items"]
        if not items:
            raise ValueError(f"group ({gd['origin']}, {gd['app']}) has no items")
        choices = [
            Choice(int(it["k"]), float(it["gamma"]), float(it["delta"]) if "delta" in it else None)
            for it in items
        ]
        values = np.array([float(it["value"]) for it in items])
        weights = np.zeros((len(rows), len(items)))
        for j, it in enumerate(items):
            w = it.get("weights", [])
            if len(w) != len(rows):
                raise ValueError("item weights must align with the row list")
            weights[:, j] = w
        groups.append(Group(int(gd["origin"]), str(gd["app"]), float(gd.get("size", 0.0)), choices, values, weights))
    return MmkpProblem(rows=rows, groups=groups)


def schedule_to_json(problem: MmkpProblem, schedule: Schedule) -> dict:
    return {
        "objective": schedule.objective,
        "feasible": schedule.feasible,
        "flags": sorted(schedule.flags),
        "assignment": [
            {
                "origin": origin,
                "app": app,
                "k": choice.k,
                "gamma": choice.gamma,
                **({"delta": choice.delta} if choice.delta is not None else {}),
            }
            for (origin, app), choice in sorted(schedule.assignment.items())
        ],
        "rows": [
            {
                "kind": row.label(),
                "bound": row.bound,
                "lhs": lhs,
                "slack": row.bound - lhs,
                "ok": ok,
            }
            for row, lhs, ok in zip(problem.rows, schedule.row_lhs, schedule.row_ok)
        ],
    }
