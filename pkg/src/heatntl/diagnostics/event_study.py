"""Log-NTL path around heatwave onsets, baselined on the days just before.

For an onset on day t0 and each offset o in the window, the event's
deviation is ``ln NTL(t0 + o) - mean(ln NTL(t0 + b))`` over the negative
offsets ``b`` (-2 and -1 by default). The curve is the across-event mean of
those deviations; the band uses the across-event standard error.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from ..core_types import CityDataset, ValidationError, fmt_float
from ..heatwave import HeatwaveSeries

EVENT_COLUMNS = ("offset", "effect", "ci_low", "ci_high", "n_events")


class NoCompleteEventsError(ValidationError):
    pass


@dataclass(frozen=True)
class EventStudyResult:
    offsets: np.ndarray
    effect: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_events: int
    onsets: tuple[dt.date, ...]
    n_incomplete: int = 0
    n_overlapping: int = 0
    deviations: np.ndarray | None = None  # events x offsets

    def rows(self) -> list[dict]:
        return [{"offset": int(o), "effect": float(e), "ci_low": float(lo), "ci_high": float(hi),
                 "n_events": self.n_events}
                for o, e, lo, hi in zip(self.offsets, self.effect, self.ci_low, self.ci_high)]


def select_events(onsets, available: set, window: tuple[int, int]):
    """Onsets kept after the completeness and overlap rules, plus exclusion counts.

    Onsets are scanned in date order. One is dropped as incomplete if any day
    of its window is missing, and as overlapping if its window intersects the
    window of the last kept event.
    """
    lo, hi = window
    kept, incomplete, overlapping = [], 0, 0
    for t0 in sorted(onsets):
        days = [t0 + dt.timedelta(days=o) for o in range(lo, hi + 1)]
        if not all(day in available for day in days):
            incomplete += 1
            continue
        if kept and (t0 - kept[-1]).days + lo <= hi:
            overlapping += 1
            continue
        kept.append(t0)
    return kept, incomplete, overlapping


def event_study(
    dataset: CityDataset,
    hw: HeatwaveSeries,
    window: tuple[int, int] = (-2, 5),
    level: float = 0.95,
) -> EventStudyResult:
    lo, hi = window
    if not lo < 0 <= hi:
        raise ValueError(f"window must span negative and non-negative offsets, got {window}")
    log_ntl = dict(zip(dataset.dates, dataset.log_radiance()))
    onset_dates = [hw.dates[i] for i in hw.onsets]
    kept, incomplete, overlapping = select_events(onset_dates, set(log_ntl), window)
    if not kept:
        raise NoCompleteEventsError(
            f"no heatwave onset with a complete {lo}..+{hi} window "
            f"({len(onset_dates)} onsets, {incomplete} incomplete, {overlapping} overlapping)")

    offsets = np.arange(lo, hi + 1)
    dev = np.array([[log_ntl[t0 + dt.timedelta(days=int(o))] for o in offsets] for t0 in kept])
    dev -= dev[:, offsets < 0].mean(axis=1, keepdims=True)
    n = dev.shape[0]
    effect = dev.mean(axis=0)
    if n > 1:
        half = stats.norm.ppf(0.5 + level / 2) * dev.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        half = np.full(offsets.size, np.nan)
    return EventStudyResult(offsets, effect, effect - half, effect + half, n, tuple(kept),
                            incomplete, overlapping, dev)


def write_event_study_csv(result: EventStudyResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for r in result.rows():
            w.writerow([r["offset"], fmt_float(r["effect"]), fmt_float(r["ci_low"]),
                        fmt_float(r["ci_high"]), r["n_events"]])
