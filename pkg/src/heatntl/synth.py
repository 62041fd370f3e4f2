"""Synthetic data with known effects, and brute-force reference oracles.

Two generators live here. :func:`generate` draws a design matrix directly
(partially linear model with known ``theta``) for estimator checks.
:func:`synth_city` draws a weather/NTL daily record pair so the whole
pipeline, CSVs included, can run on a city whose heatwave effect is known.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .climate_features import FeatureMatrix
from .core_types import DailyWeather, NtlDaily, write_ntl_csv, write_weather_csv
from .heatwave import detect_heatwaves

NONLINEARITIES = ("linear", "quadratic", "interaction")


@dataclass(frozen=True)
class SynthConfig:
    n_days: int = 2000
    true_theta: float = 0.5
    confounding_strength: float = 1.0
    nonlinearity: str = "linear"
    noise_sd: float = 1.0
    seed: int = 0
    n_features: int = 10
    ar_coef: float = 0.6
    bound_propensity: bool = True

    def __post_init__(self):
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"nonlinearity must be one of {NONLINEARITIES}")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be > 0")
        if self.n_days < 2:
            raise ValueError("n_days must be >= 2")
        if self.n_features < 2:
            raise ValueError("n_features must be >= 2")
        if not -1 < self.ar_coef < 1:
            raise ValueError("ar_coef must lie in (-1, 1)")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


def _weather_like(rng: np.random.Generator, n: int, p: int, phi: float):
    """AR(1) in time, Toeplitz 0.5^|j-k| across columns, unit marginal variance."""
    cov = 0.5 ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    L = np.linalg.cholesky(cov)
    Z = rng.standard_normal((n, p)) @ L.T
    X = np.empty((n, p))
    X[0] = Z[0]
    s = math.sqrt(1.0 - phi * phi)
    for t in range(1, n):
        X[t] = phi * X[t - 1] + s * Z[t]
    return X, cov


def generate(config: SynthConfig) -> tuple[FeatureMatrix, float]:
    """Draw ``(X, D, Y)`` with ``Y = theta D + g(X) + eps`` and ``D ~ Bernoulli(m(X))``.

    A standardised confounding index ``idx`` enters both nuisances:
    ``m = clip(0.5 + 0.15 s idx, 0.05, 0.95)`` and ``g = X b + s idx (+ a
    nonlinear term)``, where ``s`` is the confounding strength. With
    ``bound_propensity=False`` the clip is to [0, 1] instead.
    """
    rng = np.random.default_rng(config.seed)
    n, p = config.n_days, config.n_features
    X, cov = _weather_like(rng, n, p, config.ar_coef)
    a = np.zeros(p)
    a[:3] = (1.0, 0.5, 0.25)
    idx = X @ a / math.sqrt(a @ cov @ a)
    b = np.zeros(p)
    b[:5] = (0.6, -0.4, 0.3, 0.2, -0.2)
    s = config.confounding_strength

    lo, hi = (0.05, 0.95) if config.bound_propensity else (0.0, 1.0)
    m = np.clip(0.5 + 0.15 * s * idx, lo, hi)
    D = (rng.random(n) < m).astype(float)
    g = X @ b + s * idx
    if config.nonlinearity == "quadratic":
        g = g + 0.5 * (X[:, 0] ** 2 - 1.0)
    elif config.nonlinearity == "interaction":
        g = g + X[:, 0] * X[:, 1]
    Y = config.true_theta * D + g + config.noise_sd * rng.standard_normal(n)

    start = dt.date(2000, 1, 1)
    dates = tuple(start + dt.timedelta(days=i) for i in range(n))
    names = tuple(f"x{j}" for j in range(p))
    return FeatureMatrix(dates, names, X, D, Y), config.true_theta


def brute_force_heatwave_count(temps, p: float, d: int) -> int:
    """Heatwave-day count by scanning every length-``d`` window.

    The threshold is numpy's default (linear) quantile; day t counts when
    all of days t-d+1..t reach it.
    """
    x = [float(v) for v in temps]
    if len(x) > 10_000:
        raise ValueError("oracle limited to 10000 days")
    if not x:
        return 0
    tau = float(np.quantile(np.asarray(x), p))
    count = 0
    for end in range(d - 1, len(x)):
        if all(x[k] >= tau for k in range(end - d + 1, end + 1)):
            count += 1
    return count


@dataclass(frozen=True)
class SynthCityConfig:
    """Daily weather and NTL for one synthetic city.

    ``ln NTL = base + theta * HW + weather terms + noise`` where ``HW`` is the
    heatwave indicator at (``effect_p``, ``effect_d``) on average temperature.
    Hot weather also raises ``temp_max`` and lowers humidity, so a naive
    comparison of heatwave and other days is confounded.
    """

    name: str = "synthville"
    n_days: int = 1500
    start: dt.date = dt.date(2015, 1, 1)
    true_theta: float = 0.3
    effect_p: float = 0.80
    effect_d: int = 3
    noise_sd: float = 0.1
    temp_effect: float = 0.03
    seed: int = 0
    gap_days: tuple[int, ...] = field(default_factory=tuple)  # day offsets with no NTL retrieval

    def __post_init__(self):
        if self.n_days < 100:
            raise ValueError("n_days must be >= 100")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be > 0")


@dataclass(frozen=True)
class SynthCity:
    config: SynthCityConfig
    weather: tuple[DailyWeather, ...]
    ntl: tuple[NtlDaily, ...]
    heatwave: np.ndarray  # effect-defining indicator, aligned with weather


def synth_city(config: SynthCityConfig) -> SynthCity:
    rng = np.random.default_rng(config.seed)
    n = config.n_days
    dates = [config.start + dt.timedelta(days=i) for i in range(n)]
    doy = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
    season = np.sin(2 * np.pi * (doy - 100) / 365.25)

    noise = np.empty(n)
    noise[0] = rng.normal(0, 2.5)
    for t in range(1, n):
        noise[t] = 0.7 * noise[t - 1] + rng.normal(0, 2.5 * math.sqrt(1 - 0.49))
    temp_avg = 22 + 6 * season + noise
    temp_max = temp_avg + 4 + np.abs(rng.normal(0, 1, n))
    humidity = np.clip(60 - 1.5 * (temp_avg - 22) + rng.normal(0, 8, n), 5, 100)
    dew = temp_avg - (100 - humidity) / 5
    cloud = np.clip(50 + rng.normal(0, 20, n), 0, 100)
    precip = np.where(rng.random(n) < 0.3, rng.exponential(4.0, n), 0.0)
    wind = rng.gamma(2.0, 3.0, n)
    solar = np.clip(15 + 5 * season - 0.08 * (cloud - 50) + rng.normal(0, 2, n), 0, None)

    hw = detect_heatwaves(dates, temp_avg, config.effect_p, config.effect_d).heatwave.astype(float)
    log_ntl = (3.0 + config.true_theta * hw + config.temp_effect * (temp_max - 26)
               - 0.003 * (cloud - 50) - 0.002 * (humidity - 60)
               + config.noise_sd * rng.standard_normal(n))
    gap = rng.uniform(0.0, 0.3, n)

    weather = tuple(
        DailyWeather(dates[i], float(temp_max[i]), float(temp_avg[i]), float(humidity[i]),
                     float(dew[i]), float(cloud[i]), float(precip[i]), float(wind[i]), float(solar[i]))
        for i in range(n))
    skip = set(config.gap_days)
    ntl = tuple(NtlDaily(dates[i], float(np.exp(log_ntl[i])), float(gap[i]))
                for i in range(n) if i not in skip)
    return SynthCity(config, weather, ntl, hw)


def write_synth_city(city: SynthCity, out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``<name>_weather.csv`` and ``<name>_ntl.csv``; return both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wpath = out / f"{city.config.name}_weather.csv"
    npath = out / f"{city.config.name}_ntl.csv"
    write_weather_csv(city.weather, wpath, include_cdd=False)
    write_ntl_csv(city.ntl, npath)
    return wpath, npath
