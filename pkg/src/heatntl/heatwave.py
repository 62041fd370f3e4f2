"""Percentile hot days and consecutive-day heatwave indicators."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core_types import DailyWeather, fmt_float


@dataclass(frozen=True)
class Threshold:
    tau: float
    percentile_p: float
    n_support: int


def percentile_threshold(temps: Sequence[float], p: float) -> Threshold:
    """Empirical ``p`` quantile, interpolating linearly between order statistics.

    With the sample sorted ascending and 1-based index ``h = 1 + p (n - 1)``,
    the quantile is ``x[floor(h)] + frac(h) * (x[floor(h) + 1] - x[floor(h)])``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    x = np.sort(np.asarray(temps, dtype=float))
    if x.size == 0:
        raise ValueError("empty temperature sample")
    if not np.isfinite(x).all():
        raise ValueError("temperature sample contains non-finite values")
    h = p * (x.size - 1)  # 0-based
    lo = int(math.floor(h))
    frac = h - lo
    if lo + 1 >= x.size or frac == 0.0 or x[lo + 1] == x[lo]:
        tau = float(x[lo])
    else:
        tau = float(x[lo] + frac * (x[lo + 1] - x[lo]))
    return Threshold(tau=tau, percentile_p=p, n_support=int(x.size))


def hot_day_indicator(temps: Sequence[float], tau: float) -> np.ndarray:
    """1 where the temperature reaches the threshold (ties count as hot)."""
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    t = np.asarray(temps, dtype=float)
    return (t >= tau).astype(np.int8)


def heatwave_indicator(hot_day: Sequence[int], d: int) -> np.ndarray:
    """1 where the trailing window of ``d`` days ending at t is all hot.

    Windows never reach before the first sample, so the first ``d - 1``
    positions are always 0.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    hot = np.asarray(hot_day, dtype=np.int64)
    if hot.size and not np.isin(hot, (0, 1)).all():
        raise ValueError("hot_day must be 0/1 valued")
    window = np.convolve(hot, np.ones(d, dtype=np.int64))[: hot.size]
    hw = (window >= d).astype(np.int8)
    hw[: d - 1] = 0
    return hw


def episode_onsets(hw: Sequence[int]) -> list[int]:
    a = np.asarray(hw, dtype=np.int8)
    if a.size == 0:
        return []
    starts = np.flatnonzero((a == 1) & (np.concatenate(([0], a[:-1])) == 0))
    return starts.tolist()


@dataclass(frozen=True)
class HeatwaveSeries:
    dates: tuple[dt.date, ...]
    temps: np.ndarray
    hot_day: np.ndarray
    heatwave: np.ndarray
    percentile_p: float
    duration_d: int
    threshold: Threshold

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def onsets(self) -> list[int]:
        # a calendar gap also starts a new episode
        out = episode_onsets(self.heatwave)
        for i in range(1, len(self.dates)):
            if (self.heatwave[i] and self.heatwave[i - 1]
                    and (self.dates[i] - self.dates[i - 1]).days > 1):
                out.append(i)
        return sorted(out)

    def align(self, dates: Sequence[dt.date]) -> "HeatwaveSeries":
        """Restrict to ``dates`` (all of which must be present)."""
        pos = {d: i for i, d in enumerate(self.dates)}
        try:
            idx = np.array([pos[d] for d in dates], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"date {exc.args[0]} not covered by heatwave series") from None
        return HeatwaveSeries(tuple(dates), self.temps[idx], self.hot_day[idx], self.heatwave[idx],
                              self.percentile_p, self.duration_d, self.threshold)


def detect_heatwaves(
    dates: Sequence[dt.date], temps: Sequence[float], p: float, d: int
) -> HeatwaveSeries:
    """Hot-day and heatwave indicators on a daily series.

    The threshold uses every supplied day. Calendar days missing from
    ``dates`` break hot-day runs: they are treated as not hot when counting
    consecutive days, then dropped from the output.
    """
    dates = tuple(dates)
    temps = np.asarray(temps, dtype=float)
    if len(dates) != temps.size:
        raise ValueError("dates and temps differ in length")
    if any(a >= b for a, b in zip(dates, dates[1:])):
        raise ValueError("dates must be strictly increasing")
    thr = percentile_threshold(temps, p)
    hot = hot_day_indicator(temps, thr.tau)
    offsets = np.array([(x - dates[0]).days for x in dates], dtype=np.int64)
    calendar_hot = np.zeros(offsets[-1] + 1, dtype=np.int8)
    calendar_hot[offsets] = hot
    hw = heatwave_indicator(calendar_hot, d)[offsets]
    return HeatwaveSeries(dates, temps, hot, hw, p, d, thr)


def detect_from_weather(
    weather: Sequence[DailyWeather], p: float, d: int, temp_column: str = "temp_avg"
) -> HeatwaveSeries:
    return detect_heatwaves([w.date for w in weather],
                            [getattr(w, temp_column) for w in weather], p, d)


def write_heatwave_csv(hw: HeatwaveSeries, path: str | Path) -> None:
    onset = np.zeros(len(hw), dtype=np.int8)
    onset[hw.onsets] = 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "temp_used", "hot_day", "heatwave", "onset"])
        for i, date in enumerate(hw.dates):
            w.writerow([date.isoformat(), fmt_float(hw.temps[i]), int(hw.hot_day[i]),
                        int(hw.heatwave[i]), int(onset[i])])
