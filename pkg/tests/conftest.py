import datetime as dt
from pathlib import Path

import numpy as np
import pytest

from heatntl.core_types import CityDataset, DailyWeather, NtlDaily

FIXTURES = Path(__file__).parent / "fixtures"
START = dt.date(2020, 1, 1)


def day(i: int) -> dt.date:
    return START + dt.timedelta(days=int(i))


def weather(date, temp_avg=20.0, **kw) -> DailyWeather:
    base = dict(temp_max=temp_avg + 5.0, temp_avg=temp_avg, humidity=60.0, dew=10.0, cloudcover=40.0,
                precip=0.0, windspeed=10.0, solarenergy=15.0)
    base.update(kw)
    return DailyWeather(date=date, **base)


def dataset_from(temps, log_ntl, rng=None, offsets=None) -> CityDataset:
    """City with given temperatures and log radiance; other weather drawn at random."""
    rng = rng or np.random.default_rng(0)
    offsets = range(len(temps)) if offsets is None else offsets
    ws, ns = [], []
    for i, t, y in zip(offsets, temps, log_ntl):
        ws.append(weather(day(i), temp_avg=float(t), temp_max=float(t) + 4 + rng.random(),
                          humidity=float(rng.uniform(30, 90)), cloudcover=float(rng.uniform(0, 100)),
                          solarenergy=float(rng.uniform(5, 25)), windspeed=float(rng.uniform(0, 30)),
                          precip=float(rng.exponential(2.0)), dew=float(t) - 8))
        ns.append(NtlDaily(day(i), float(np.exp(y)), 0.1))
    return CityDataset(tuple(ws), tuple(ns))


def planted_runs(n_days, runs, seed=0, cool=(15.0, 1.0), hot=(35.0, 1.0)):
    """Temperatures with hot runs of the given lengths at random, non-touching positions.

    Returns (temps, run_starts, run_lengths). Runs are separated by at least
    one cool day.
    """
    rng = np.random.default_rng(seed)
    lengths = list(runs)
    rng.shuffle(lengths)
    slack = n_days - sum(l + 1 for l in lengths)
    if slack < 0:
        raise ValueError("too many runs for the series length")
    # split the slack into len(runs)+1 gaps at random
    cuts = np.sort(rng.integers(0, slack + 1, len(lengths)))
    gaps = np.diff(np.concatenate(([0], cuts, [slack])))
    temps = rng.normal(*cool, n_days)
    starts, pos = [], 0
    for g, l in zip(gaps, lengths):
        pos += g + 1
        temps[pos:pos + l] = rng.normal(*hot, l)
        starts.append(pos)
        pos += l
    return temps, starts, lengths


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def planted_effect_city(seed=0, effect=0.16, noise=0.1):
    """City whose log NTL rises only on days that close a 3-day hot run.

    Hot days are exactly the top 20% of temperatures, so at p = 0.80 the
    d = 3 indicator marks the effect days. The d = 2 indicator also covers
    ~2000 unaffected days, diluting the effect below detection.
    """
    from heatntl.heatwave import heatwave_indicator

    temps, _, _ = planted_runs(20000, [3] * 10 + [2] * 1985, seed=seed)
    hw3 = heatwave_indicator((temps > 25).astype(int), 3)
    rng = np.random.default_rng(seed + 1000)
    log_ntl = 1.0 + effect * hw3 + rng.normal(0, noise, temps.size)
    return dataset_from(temps, log_ntl, rng)


def event_fixture(n_events=30, shift=0.2, start_offset=3, noise=0.02, d=3, seed=0):
    """Isolated hot runs with log NTL raised by ``shift`` from onset + ``start_offset`` to + 5.

    Returns (dataset, heatwave series). Day 0 of each event is the heatwave
    onset, the d-th day of its hot run. The percentile is picked so the
    threshold falls in the gap between cool and hot days.
    """
    from heatntl.heatwave import detect_from_weather

    rng = np.random.default_rng(seed)
    spacing = 30
    n = spacing * (n_events + 1)
    temps = rng.normal(15, 1, n)
    log_ntl = 2.0 + rng.normal(0, noise, n)
    for k in range(n_events):
        run = spacing * (k + 1)
        temps[run:run + d + 1] = rng.normal(35, 1, d + 1)
        onset = run + d - 1
        log_ntl[onset + start_offset:onset + 6] += shift
    ds = dataset_from(temps, log_ntl, rng)
    n_cool = n - n_events * (d + 1)
    hw = detect_from_weather(ds.weather, (n_cool - 0.5) / (n - 1), d)
    return ds, hw


ACCEPTANCE: list[str] = []


def record_criterion(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
