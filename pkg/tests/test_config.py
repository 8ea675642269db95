import pytest

from offloadsim.config import SimConfig, load_config
from offloadsim.trace import AppKind

FULL_INI = """
[sim]
n = 12
wifi_speed_bytes_per_sec = 500000
gamma_set = 0.2, 0.4, 0.8
beta = 0.8
unit_price = 0.02
monthly_budget = 25
billing_day = 3
days_in_month = 28
window = 2
deadline = 2
strict_budget = true
weekday_weekend = true
baseline_fair_share = false
deferral_threshold = 0.5

[budget]
mode = normal
mean = 28
sigma = 4
low = 18
high = 38

[extension]
delta_set = 0, 0.25, 1.0
alpha_cap = 0.9

[app_kind]
downloads = FixedTime

[utility.email]
C = 0.5
eta = 0.1
"""


def test_load_config_full_roundtrip(tmp_path):
    path = tmp_path / "sim.ini"
    path.write_text(FULL_INI)
    cfg = load_config(path)
    assert cfg.n == 12
    assert cfg.wifi_speed == 500000
    assert cfg.gamma_set == (0.2, 0.4, 0.8)
    assert cfg.beta == 0.8
    assert cfg.unit_price == 0.02
    assert cfg.monthly_budget == 25
    assert cfg.billing_day == 3
    assert cfg.days_in_month == 28
    assert cfg.window == 2
    assert cfg.deadline == 2
    assert cfg.strict_budget is True
    assert cfg.weekday_weekend is True
    assert cfg.baseline_fair_share is False
    assert cfg.deferral_threshold == 0.5
    assert cfg.budget.mode == "normal"
    assert (cfg.budget.mean, cfg.budget.sigma) == (28, 4)
    assert cfg.delta_set == (0.0, 0.25, 1.0)
    assert cfg.alpha_cap == 0.9
    # section/key lookups are case-insensitive; canonical names come back
    assert cfg.app_kind_overrides == {"Downloads": AppKind.FIXED_TIME}
    assert cfg.utility_overrides["Email"] == {"C": 0.5, "eta": 0.1}
    apps = cfg.apps()
    assert apps["Downloads"].kind is AppKind.FIXED_TIME


def test_load_config_defaults_without_file():
    cfg = load_config(None)
    assert cfg.n == 24
    assert cfg.gamma_set == (0.25, 0.5, 1.0)
    assert cfg.budget.mode == "fixed"


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.ini")


def test_load_config_rejects_bad_values(tmp_path):
    bad_mode = tmp_path / "a.ini"
    bad_mode.write_text("[budget]\nmode = sometimes\n")
    with pytest.raises(ValueError, match="budget mode"):
        load_config(bad_mode)
    bad_app = tmp_path / "b.ini"
    bad_app.write_text("[app_kind]\nfax = FixedTime\n")
    with pytest.raises(ValueError, match="fax"):
        load_config(bad_app)
    bad_grid = tmp_path / "c.ini"
    bad_grid.write_text("[sim]\ngamma_set = 1.0, 0.5\n")
    with pytest.raises(ValueError, match="ascending"):
        load_config(bad_grid)


def test_config_hash_tracks_content():
    a, b = SimConfig(), SimConfig()
    assert a.hash() == b.hash()
    b.beta = 0.9
    assert a.hash() != b.hash()


def test_extension_grid_includes_zero():
    grid = SimConfig().grid(extension=True)
    assert grid.gamma_set[0] == 0.0
    assert grid.delta_set[0] == 0.0
    assert grid.includes_zero
