"""Seeded synthetic market generator for desk-scale experiments.

The generated price is

    base + daily shape + weekly shape + gas_coupling * gas - wind_coupling * wind + noise

so the sign of the gas (positive) and wind (negative) correlations is fixed
by construction.  Demand shares the daily shape, which lets models without an
hour-of-day feature recover the intraday profile from demand and price lags.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from datetime import date, timedelta

import numpy as np

from .align import AlignedDataset, _as_date
from .series import IngestError

CANONICAL_COLUMNS = (
    "dam_price",
    "eu_gas_price",
    "ie_demand",
    "ni_demand",
    "total_demand",
    "ie_generation",
    "ni_generation",
    "total_generation",
    "ie_wind_generation",
    "ni_wind_generation",
    "total_wind_generation",
    "ie_wind_availability",
    "ni_wind_availability",
    "ni_solar_generation",
    "snsp",
    "wind_speed_dublin_airport",
    "wind_speed_mace_head",
    "wind_speed_malin_head",
)


@dataclass(frozen=True)
class SyntheticRecipe:
    start: date = date(2019, 1, 1)
    end: date = date(2020, 12, 31)
    base_price: float = 60.0
    daily_amplitude: float = 30.0
    weekly_amplitude: float = 6.0
    gas_start: float = 20.0
    gas_drift: float = 0.0
    gas_volatility: float = 0.2
    gas_coupling: float = 1.5
    wind_mean: float = 14.0          # knots
    wind_persistence: float = 0.9    # hourly AR(1) coefficient
    wind_volatility: float = 2.0
    wind_capacity: float = 5000.0    # MW, all-island
    wind_coupling: float = 0.012     # EUR/MWh per MW
    demand_base: float = 4200.0
    demand_daily_amplitude: float = 900.0
    demand_weekly_amplitude: float = 250.0
    demand_noise: float = 60.0
    solar_capacity: float = 250.0
    noise: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "start", _as_date(self.start))
        object.__setattr__(self, "end", _as_date(self.end))

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticRecipe":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown synthetic recipe keys: {sorted(unknown)}")
        return cls(**data)


def _daily_shape(hour: np.ndarray) -> np.ndarray:
    # morning and evening peaks, overnight trough
    return 0.7 * np.sin(2 * np.pi * (hour - 7) / 24) + 0.3 * np.sin(4 * np.pi * (hour - 5) / 24)


def _weekly_shape(weekday: np.ndarray) -> np.ndarray:
    return np.where(weekday < 5, 0.4, -1.0)


def generate_synthetic(recipe: SyntheticRecipe, seed: int) -> AlignedDataset:
    """Build a complete aligned dataset from ``recipe``; identical output for identical seeds."""
    n_days = (recipe.end - recipe.start).days + 1
    if n_days <= 0:
        raise IngestError(f"empty synthetic date range {recipe.start}..{recipe.end}")
    rng = np.random.default_rng(seed)
    n = 24 * n_days
    hour = np.arange(n) % 24
    day_idx = np.arange(n) // 24
    days = [recipe.start + timedelta(days=int(d)) for d in range(n_days)]
    weekday_day = np.array([d.weekday() for d in days])
    doy_day = np.array([d.timetuple().tm_yday for d in days])
    weekday = weekday_day[day_idx]
    annual = np.cos(2 * np.pi * (doy_day[day_idx] - 15) / 365.25)  # +1 mid-January

    daily = _daily_shape(hour)
    weekly = _weekly_shape(weekday)

    # gas: random walk on trading days, weekend holds Friday close
    gas_day = np.empty(n_days)
    level = recipe.gas_start
    steps = rng.standard_normal(n_days)
    for i, wd in enumerate(weekday_day):
        if wd < 5 and i > 0:
            level = max(1.0, level + recipe.gas_drift + recipe.gas_volatility * steps[i])
        gas_day[i] = level
    gas = gas_day[day_idx]

    # latent hourly wind speed, AR(1) around its mean
    shocks = rng.standard_normal(n)
    speed = np.empty(n)
    s = recipe.wind_mean
    phi = recipe.wind_persistence
    for t in range(n):
        s = recipe.wind_mean + phi * (s - recipe.wind_mean) + recipe.wind_volatility * shocks[t]
        speed[t] = s
    speed = np.clip(speed, 0.0, None)
    stations = {
        "wind_speed_dublin_airport": 0.8,
        "wind_speed_mace_head": 1.15,
        "wind_speed_malin_head": 1.3,
    }
    station_cols = {
        name: np.clip(k * speed + rng.normal(0.0, 1.0, n), 0.0, None) for name, k in stations.items()
    }
    cf = np.clip((speed / 28.0) ** 2, 0.0, 1.0)
    ie_share = 0.8
    ie_avail = ie_share * recipe.wind_capacity * cf
    ni_avail = (1 - ie_share) * recipe.wind_capacity * np.clip(cf * rng.uniform(0.9, 1.1, n), 0.0, 1.0)
    curtail = rng.uniform(0.85, 1.0, n)
    ie_wind = ie_avail * curtail
    ni_wind = ni_avail * curtail
    total_wind = ie_wind + ni_wind

    total_demand = (
        recipe.demand_base
        + recipe.demand_daily_amplitude * daily
        + recipe.demand_weekly_amplitude * weekly
        + 0.1 * recipe.demand_base * annual
        + rng.normal(0.0, recipe.demand_noise, n)
    )
    total_demand = np.clip(total_demand, 0.0, None)
    ie_demand = 0.77 * total_demand
    ni_demand = total_demand - ie_demand
    imports = rng.normal(150.0, 80.0, n)
    ie_gen = np.clip(ie_demand - 0.7 * imports, 0.0, None)
    ni_gen = np.clip(ni_demand - 0.3 * imports, 0.0, None)

    daylight = np.clip(np.sin(np.pi * (hour - 6) / 12), 0.0, None)
    solar = recipe.solar_capacity * daylight * (0.55 - 0.45 * annual) * rng.uniform(0.3, 1.0, n)
    snsp = np.clip(100.0 * (total_wind + solar + np.clip(imports, 0.0, None)) / np.maximum(total_demand, 1.0), 0.0, 75.0)

    price = (
        recipe.base_price
        + recipe.daily_amplitude * daily
        + recipe.weekly_amplitude * weekly
        + recipe.gas_coupling * gas
        - recipe.wind_coupling * total_wind
        + recipe.noise * rng.standard_normal(n)
    )

    columns = {
        "dam_price": price,
        "eu_gas_price": gas,
        "ie_demand": ie_demand,
        "ni_demand": ni_demand,
        "total_demand": total_demand,
        "ie_generation": ie_gen,
        "ni_generation": ni_gen,
        "total_generation": ie_gen + ni_gen,
        "ie_wind_generation": ie_wind,
        "ni_wind_generation": ni_wind,
        "total_wind_generation": total_wind,
        "ie_wind_availability": ie_avail,
        "ni_wind_availability": ni_avail,
        "ni_solar_generation": solar,
        "snsp": snsp,
        **station_cols,
    }
    return AlignedDataset(recipe.start, columns)


def benchmark_recipe(**overrides) -> SyntheticRecipe:
    """Strongly daily-seasonal recipe used for model skill checks.

    Gas is held flat: a random-walk gas price over a single training year is
    confounded with the calendar fields, and linear models then extrapolate
    that spurious trend into the test quarter.
    """
    params = dict(start=date(2018, 12, 25), end=date(2020, 12, 31), gas_volatility=0.0)
    params.update(overrides)
    return SyntheticRecipe(**params)
