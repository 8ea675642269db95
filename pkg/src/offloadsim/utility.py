"""Cost/throughput/delay utility of completing an application session.

Two functional forms, one per session kind:

* fixed-time (streaming):   U = C * exp(-nu + r*nu - mu*t) - eta * p * r * s
* fixed-volume (transfers): U = C * exp(-(s/r)*nu - mu*t) - eta * p * s

with price p per normalized volume unit, deferral t in whole periods, rate r
normalized to WiFi = 1, and size s (seconds for fixed-time, volume units for
fixed-volume).  The -nu term normalizes the fixed-time branch so that at
r = 1, t = 0, p = 0 the utility equals C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

from .trace import AppClass, AppKind


@dataclass(frozen=True)
class UtilityParams:
    C: float
    mu: float
    nu: float
    eta: float

    def __post_init__(self) -> None:
        for name in ("C", "mu", "nu", "eta"):
            if getattr(self, name) < 0:
                raise ValueError(f"utility parameter {name} must be nonnegative")


# Fitted per-application constants (C, mu, nu, eta).  Email and Browsing carry
# a negligible per-session cost, so their eta is 0.
DEFAULT_PARAMS: Mapping[str, UtilityParams] = {
    "Email": UtilityParams(0.9848, 0.1527, 0.1527, 0.0),
    "Browsing": UtilityParams(0.6865, 0.3269, 0.0263, 0.0),
    "Video": UtilityParams(0.9399, 0.0144, 4.3785, 0.0986),
    "SocialNetworking": UtilityParams(0.4738, 0.006, 0.006, 0.0986),
    "Downloads": UtilityParams(0.6737, 0.0097, 0.0097, 0.0986),
}


def default_params(app: AppClass | str) -> UtilityParams:
    name = app.name if isinstance(app, AppClass) else app
    return DEFAULT_PARAMS[name]


def params_table(overrides: Optional[Mapping[str, Mapping[str, float]]] = None) -> dict[str, UtilityParams]:
    """Per-app parameters with optional config overrides applied."""
    table = dict(DEFAULT_PARAMS)
    for name, patch in (overrides or {}).items():
        base = table[name]
        table[name] = UtilityParams(
            C=patch.get("C", base.C),
            mu=patch.get("mu", base.mu),
            nu=patch.get("nu", base.nu),
            eta=patch.get("eta", base.eta),
        )
    return table


@dataclass(frozen=True)
class UtilityContext:
    """Evaluation point: price, periods deferred, rate, session size."""

    p: float
    t: int
    r: float
    s: float

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("deferral t must be nonnegative")
        if self.r <= 0:
            raise ValueError("rate r must be positive")
        if self.s < 0:
            raise ValueError("size s must be nonnegative")


def utility(params: UtilityParams, kind: AppKind, ctx: UtilityContext) -> float:
    """Session utility for one completion choice."""
    return _utility(params, kind, ctx.p, ctx.t, ctx.r, ctx.s)


def _utility(params: UtilityParams, kind: AppKind, p: float, t: float, r: float, s: float) -> float:
    if r <= 0:
        raise ValueError("rate r must be positive")
    if kind is AppKind.FIXED_TIME:
        return params.C * math.exp(-params.nu + r * params.nu - params.mu * t) - params.eta * p * r * s
    return params.C * math.exp(-(s / r) * params.nu - params.mu * t) - params.eta * p * s


def choice_value(
    params: UtilityParams,
    kind: AppKind,
    origin: int,
    k: int,
    gamma: float,
    w_k: float,
    size: float,
    price: float,
) -> float:
    """Expected utility of deferring a group from `origin` to `k` at 3G rate `gamma`.

    WiFi (free, rate 1) completes with probability w_k, 3G otherwise.
    """
    if k < origin:
        raise ValueError("target period precedes origin")
    if not 0.0 <= w_k <= 1.0:
        raise ValueError("w_k must lie in [0, 1]")
    t = k - origin
    return w_k * _utility(params, kind, 0.0, t, 1.0, size) + (1.0 - w_k) * _utility(
        params, kind, price, t, gamma, size
    )
