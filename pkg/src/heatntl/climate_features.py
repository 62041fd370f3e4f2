"""Confounder design matrix: degree days, lags, interactions, and X/D/Y assembly."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core_types import (CityConfig, CityDataset, FeatureSpec, ValidationError, fmt_float,
                         require_positive_radiance)
from .heatwave import HeatwaveSeries

# lagged column naming follows the covariate table: Temp_lag is average temperature
LAG_PREFIX = {"cdd": "cdd", "humidity": "humidity", "temp_avg": "temp", "temp_max": "tempmax"}


@dataclass(frozen=True)
class FeatureMatrix:
    dates: tuple[dt.date, ...]
    column_names: tuple[str, ...]
    X: np.ndarray
    D: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        n = len(self.dates)
        if self.X.shape != (n, len(self.column_names)) or self.D.shape != (n,) or self.Y.shape != (n,):
            raise ValidationError(
                f"inconsistent shapes: X{self.X.shape}, D{self.D.shape}, Y{self.Y.shape}, {n} dates")
        for name, arr in (("X", self.X), ("D", self.D), ("Y", self.Y)):
            if not np.isfinite(arr).all():
                raise ValidationError(f"{name} contains missing or non-finite cells")

    @property
    def n(self) -> int:
        return len(self.dates)

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows)
        return FeatureMatrix(tuple(self.dates[i] for i in rows), self.column_names,
                             self.X[rows], self.D[rows], self.Y[rows])


def cooling_degree_days(temp_avg, base: float = 18.0):
    """Degrees by which the daily mean exceeds ``base``, floored at zero."""
    t = np.asarray(temp_avg, dtype=float)
    if not np.isfinite(t).all() or not np.isfinite(base):
        raise ValueError("inputs must be finite")
    out = np.maximum(0.0, t - base)
    return float(out) if out.ndim == 0 else out


def lag_name(column: str, offset: int) -> str:
    return f"{LAG_PREFIX.get(column, column)}_lag{offset}"


def build_lags(name: str, series: Sequence[float], lags: Sequence[int]) -> dict[str, np.ndarray]:
    """Shifted copies of ``series``; undefined leading cells are NaN (rows to trim)."""
    x = np.asarray(series, dtype=float)
    out = {}
    for i in lags:
        if i < 1:
            raise ValueError(f"lag offsets must be >= 1, got {i}")
        if i >= x.size:
            raise ValueError(f"lag {i} is not shorter than the series ({x.size})")
        col = np.full(x.size, np.nan)
        col[i:] = x[:-i]
        out[lag_name(name, i)] = col
    return out


def build_calendar_lags(name: str, dates: Sequence[dt.date], series: Sequence[float],
                        lags: Sequence[int]) -> dict[str, np.ndarray]:
    """Like :func:`build_lags` but by calendar day; a missing predecessor day gives NaN."""
    x = np.asarray(series, dtype=float)
    pos = {d: i for i, d in enumerate(dates)}
    out = {}
    for i in lags:
        if i < 1:
            raise ValueError(f"lag offsets must be >= 1, got {i}")
        if i >= x.size:
            raise ValueError(f"lag {i} is not shorter than the series ({x.size})")
        col = np.full(x.size, np.nan)
        for t, d in enumerate(dates):
            j = pos.get(d - dt.timedelta(days=i))
            if j is not None:
                col[t] = x[j]
        out[lag_name(name, i)] = col
    return out


def build_interactions(features: Mapping[str, np.ndarray],
                       pairs: Sequence[tuple[str, str]]) -> dict[str, np.ndarray]:
    out = {}
    for a, b in pairs:
        for c in (a, b):
            if c not in features:
                raise KeyError(f"unknown column {c!r}")
        out[f"{a}_x_{b}"] = np.asarray(features[a], dtype=float) * np.asarray(features[b], dtype=float)
    return out


def _weather_columns(dataset: CityDataset, cdd_base: float) -> dict[str, np.ndarray]:
    cols = {name: dataset.column(name) for name in
            ("temp_max", "temp_avg", "humidity", "dew", "cloudcover", "precip", "windspeed", "solarenergy")}
    computed = cooling_degree_days(cols["temp_avg"], cdd_base)
    file_cdd = np.array([np.nan if w.cdd is None else w.cdd for w in dataset.weather])
    cols["cdd"] = np.where(np.isnan(file_cdd), computed, file_cdd)
    return cols


def assemble_design(dataset: CityDataset, hw: HeatwaveSeries, config: CityConfig) -> FeatureMatrix:
    """Build X (declared covariates), D (heatwave indicator) and Y = ln(radiance).

    Rows lacking any lag are dropped from X, D and Y together. Column order is
    base columns, then lags in declaration order, then interactions.
    """
    if tuple(hw.dates) != dataset.dates:
        raise ValidationError("heatwave series dates do not match dataset dates")
    radiance = dataset.column("radiance")
    require_positive_radiance(radiance)
    spec: FeatureSpec = config.feature_spec
    raw = _weather_columns(dataset, config.cdd_base)
    raw["heatwave"] = hw.heatwave.astype(float)

    columns: dict[str, np.ndarray] = {}
    for name in spec.base:
        if name not in raw:
            raise KeyError(f"unknown column {name!r}")
        columns[name] = raw[name]
    for name, offsets in spec.lags:
        if name not in raw:
            raise KeyError(f"unknown column {name!r}")
        columns.update(build_calendar_lags(name, dataset.dates, raw[name], offsets))
    pool = {**raw, **columns}
    columns.update(build_interactions(pool, spec.active_interactions()))

    names = tuple(columns)
    X = np.column_stack([columns[c] for c in names]) if names else np.empty((len(dataset), 0))
    keep = np.isfinite(X).all(axis=1)
    if not keep.any():
        raise ValidationError("no rows left after trimming lag-undefined days")
    rows = np.flatnonzero(keep)
    dates = dataset.dates
    return FeatureMatrix(
        dates=tuple(dates[i] for i in rows),
        column_names=names,
        X=X[rows],
        D=raw["heatwave"][rows],
        Y=np.log(radiance[rows]),
    )


def write_feature_csv(fm: FeatureMatrix, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "Y", "D", *fm.column_names])
        for i, date in enumerate(fm.dates):
            w.writerow([date.isoformat(), fmt_float(fm.Y[i]), fmt_float(fm.D[i]),
                        *(fmt_float(v) for v in fm.X[i])])


def read_feature_csv(path: str | Path) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:3] != ["date", "Y", "D"]:
            raise ValidationError(f"{path}: feature CSV must start with date,Y,D")
        dates, Y, D, X = [], [], [], []
        for row in reader:
            dates.append(dt.date.fromisoformat(row[0]))
            Y.append(float(row[1]))
            D.append(float(row[2]))
            X.append([float(v) for v in row[3:]])
    names = tuple(header[3:])
    return FeatureMatrix(tuple(dates), names, np.array(X, dtype=float).reshape(len(dates), len(names)),
                         np.array(D), np.array(Y))
