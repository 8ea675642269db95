"""Run configuration: INI file parsing and canonical hashing."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

from .trace import AppKind, PricingPlan, RateGrid, app_classes


@dataclass
class BudgetDraw:
    """Monthly budget assignment: a fixed value or a seeded truncated normal."""

    mode: str = "fixed"  # "fixed" | "normal"
    mean: float = 30.0
    sigma: float = 5.0
    low: float = 20.0
    high: float = 40.0


@dataclass
class SimConfig:
    n: int = 24
    wifi_speed: float = 1_000_000.0  # bytes/sec; defines the normalized volume unit
    gamma_set: tuple[float, ...] = (0.25, 0.5, 1.0)
    beta: float = 1.0
    unit_price: float = 0.01
    monthly_budget: float = 30.0
    billing_day: int = 1
    days_in_month: int = 30
    window: int = 3
    deadline: int = 1
    strict_budget: bool = False
    weekday_weekend: bool = False
    baseline_fair_share: bool = True
    deferral_threshold: Optional[float] = None  # usage-shortfall gate, off by default
    budget: BudgetDraw = field(default_factory=BudgetDraw)
    # network-selection extension
    delta_set: tuple[float, ...] = (0.0, 0.5, 1.0)
    alpha_cap: float = 1.0
    app_kind_overrides: dict[str, AppKind] = field(default_factory=dict)
    utility_overrides: dict[str, dict[str, float]] = field(default_factory=dict)

    def plan(self) -> PricingPlan:
        return PricingPlan(self.unit_price, self.monthly_budget, self.billing_day)

    def grid(self, extension: bool = False) -> RateGrid:
        if extension:
            gammas = tuple(sorted({0.0, *self.gamma_set}))
            return RateGrid(gammas, self.beta, delta_set=tuple(sorted({0.0, *self.delta_set})),
                            includes_zero=True)
        return RateGrid(tuple(self.gamma_set), self.beta)

    def apps(self):
        return app_classes(self.app_kind_overrides)

    def hash(self) -> str:
        blob = json.dumps(_plain(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _plain(cfg: SimConfig) -> dict:
    d = asdict(cfg)
    d["app_kind_overrides"] = {k: v.value for k, v in cfg.app_kind_overrides.items()}
    return d


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def load_config(path: str | Path | None) -> SimConfig:
    """Build a SimConfig from an INI file; missing keys keep their defaults.

    Recognized sections: [sim], [extension], [budget], [app_kind],
    [utility.<App>] (keys C, mu, nu, eta).
    """
    cfg = SimConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)

    if parser.has_section("sim"):
        sim = parser["sim"]
        cfg.n = sim.getint("n", cfg.n)
        cfg.wifi_speed = sim.getfloat("wifi_speed_bytes_per_sec", cfg.wifi_speed)
        if "gamma_set" in sim:
            cfg.gamma_set = _floats(sim["gamma_set"])
        cfg.beta = sim.getfloat("beta", cfg.beta)
        cfg.unit_price = sim.getfloat("unit_price", cfg.unit_price)
        cfg.monthly_budget = sim.getfloat("monthly_budget", cfg.monthly_budget)
        cfg.billing_day = sim.getint("billing_day", cfg.billing_day)
        cfg.days_in_month = sim.getint("days_in_month", cfg.days_in_month)
        cfg.window = sim.getint("window", cfg.window)
        cfg.deadline = sim.getint("deadline", cfg.deadline)
        cfg.strict_budget = sim.getboolean("strict_budget", cfg.strict_budget)
        cfg.weekday_weekend = sim.getboolean("weekday_weekend", cfg.weekday_weekend)
        cfg.baseline_fair_share = sim.getboolean("baseline_fair_share",
                                                 cfg.baseline_fair_share)
        if "deferral_threshold" in sim:
            cfg.deferral_threshold = sim.getfloat("deferral_threshold")

    if parser.has_section("extension"):
        ext = parser["extension"]
        if "delta_set" in ext:
            cfg.delta_set = _floats(ext["delta_set"])
        cfg.alpha_cap = ext.getfloat("alpha_cap", cfg.alpha_cap)

    if parser.has_section("budget"):
        b = parser["budget"]
        cfg.budget = BudgetDraw(
            mode=b.get("mode", cfg.budget.mode),
            mean=b.getfloat("mean", cfg.budget.mean),
            sigma=b.getfloat("sigma", cfg.budget.sigma),
            low=b.getfloat("low", cfg.budget.low),
            high=b.getfloat("high", cfg.budget.high),
        )
        if cfg.budget.mode not in ("fixed", "normal"):
            raise ValueError(f"unknown budget mode {cfg.budget.mode!r}")

    if parser.has_section("app_kind"):
        for name, raw in parser["app_kind"].items():
            # configparser lowercases keys; map back to canonical names
            canon = _canonical_app(name)
            cfg.app_kind_overrides[canon] = AppKind(raw)

    for section in parser.sections():
        if section.startswith("utility."):
            canon = _canonical_app(section.split(".", 1)[1])
            vals = parser[section]
            cfg.utility_overrides[canon] = {
                key: vals.getfloat(key) for key in ("C", "mu", "nu", "eta") if key in vals
            }

    cfg.grid()  # validate the rate grid eagerly
    return cfg


def _canonical_app(name: str) -> str:
    from .trace import APP_NAMES

    for canon in APP_NAMES:
        if canon.lower() == name.lower():
            return canon
    raise ValueError(f"unknown application type {name!r} in config")
