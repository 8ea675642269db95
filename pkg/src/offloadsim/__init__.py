"""Cost-aware WiFi offload planning and trace-driven evaluation toolkit."""

from .config import SimConfig, load_config
from .optimizer import (
    BudgetState,
    MmkpProblem,
    Schedule,
    build_mmkp,
    build_mmkp_ext,
    daily_budget,
    online_step,
    per_period_select,
    repair_infeasible,
    solve_bruteforce,
    solve_lagrange,
)
from .records import ExecutionRecord, Network, realized_utility
from .sim import SimContext, SimReport, compare, run_day, run_trial
from .trace import (
    AppClass,
    AppKind,
    DayTrace,
    PricingPlan,
    RateGrid,
    load_trace,
    normalize_volume,
    serialize_trace,
)
from .usage import DemandForecast, ObservedUsage, adjust_for_deferrals, forecast_usage
from .utility import UtilityParams, UtilityContext, choice_value, default_params, utility
from .wifi import (
    MobilityHistory,
    WifiForecast,
    WifiProfile,
    fit_profile,
    initial_forecast,
    prediction_accuracy,
    update_forecast,
)

__version__ = "0.1.0"
