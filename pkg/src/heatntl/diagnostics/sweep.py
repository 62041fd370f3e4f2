"""Grid of (percentile, duration) heatwave definitions, one DML fit per cell."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..climate_features import assemble_design
from ..core_types import CityConfig, CityDataset, DailyWeather, fmt_float
from ..dml import DmlEstimate, run_dml
from ..heatwave import detect_from_weather
from ..nuisance import NuisanceConfig

DEFAULT_P_GRID = (0.80, 0.85, 0.90)
DEFAULT_D_GRID = (2, 3, 4)
INSUFFICIENT = "insufficient treated sample"
SWEEP_COLUMNS = ("city", "p", "d", "status", "n_treated", "theta", "se", "z", "p_value",
                 "pct_change", "n", "K", "seed", "chosen")


@dataclass(frozen=True)
class SweepCell:
    p: float
    d: int
    seed: int
    n_treated: int
    status: str  # "ok", INSUFFICIENT, or "error: ..."
    estimate: DmlEstimate | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class SweepResult:
    city: str
    cells: tuple[SweepCell, ...]
    chosen: tuple[float, int] | None
    rule: str

    def cell(self, p: float, d: int) -> SweepCell:
        for c in self.cells:
            if np.isclose(c.p, p) and c.d == d:
                return c
        raise KeyError((p, d))

    def rows(self) -> list[dict]:
        out = []
        for c in self.cells:
            e = c.estimate
            row = {"city": self.city, "p": c.p, "d": c.d, "status": c.status,
                   "n_treated": c.n_treated, "seed": c.seed,
                   "chosen": int(self.chosen is not None and np.isclose(self.chosen[0], c.p)
                                 and self.chosen[1] == c.d)}
            for k in ("theta", "se", "z", "p_value", "pct_change", "n", "K"):
                row[k] = getattr(e, k) if e is not None else None
            out.append({k: row[k] for k in SWEEP_COLUMNS})
        return out


def cell_seed(base_seed: int, i: int, j: int) -> int:
    """Seed of grid cell (i, j), independent of evaluation order."""
    return int(np.random.SeedSequence([base_seed, i, j]).generate_state(1)[0])


def select_cell(cells: Sequence[SweepCell], alpha: float = 0.05) -> tuple[float, int] | None:
    """Smallest SE among significant cells; ties go to the earlier grid cell."""
    best = None
    for c in cells:
        if c.ok and c.estimate.p_value < alpha and (best is None or c.estimate.se < best.estimate.se):
            best = c
    return None if best is None else (best.p, best.d)


def _run_cell(dataset, weather, config, learners, min_treated, p, d, seed) -> SweepCell:
    n_treated = 0
    try:
        cfg = replace(config, percentile_p=p, duration_d=d, seed=seed)
        hw = detect_from_weather(weather, p, d, cfg.temp_column).align(dataset.dates)
        fm = assemble_design(dataset, hw, cfg)
        n_treated = int(fm.D.sum())
        if n_treated < min_treated:
            return SweepCell(p, d, seed, n_treated, INSUFFICIENT)
        return SweepCell(p, d, seed, n_treated, "ok", run_dml(fm, cfg, learners))
    except Exception as exc:  # recorded per cell, the sweep carries on
        return SweepCell(p, d, seed, n_treated, f"error: {exc}")


def sweep(
    dataset: CityDataset,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
    d_grid: Sequence[int] = DEFAULT_D_GRID,
    base_config: CityConfig | None = None,
    learners: NuisanceConfig | None = None,
    min_treated: int = 10,
    jobs: int = 1,
    override: tuple[float, int] | None = None,
    alpha: float = 0.05,
    weather: Sequence[DailyWeather] | None = None,
) -> SweepResult:
    """Run DML for every (p, d) in the grid.

    Cells with fewer than ``min_treated`` heatwave days are flagged instead of
    estimated. The chosen cell is the significant one (p-value < ``alpha``)
    with the smallest SE, unless ``override`` names a cell explicitly.
    Thresholds come from ``weather`` when given (e.g. the full weather record
    before the join with NTL), otherwise from the dataset's own weather.
    """
    if not p_grid or not d_grid:
        raise ValueError("p_grid and d_grid must be non-empty")
    config = base_config or CityConfig()
    weather = dataset.weather if weather is None else weather
    specs = [(p, d, cell_seed(config.seed, i, j))
             for i, p in enumerate(p_grid) for j, d in enumerate(d_grid)]

    def work(spec):
        return _run_cell(dataset, weather, config, learners, min_treated, *spec)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = tuple(pool.map(work, specs))
    else:
        cells = tuple(work(s) for s in specs)

    if override is not None:
        p, d = override
        if not any(np.isclose(c.p, p) and c.d == d for c in cells):
            raise ValueError(f"override cell (p={p}, d={d}) is not on the grid")
        chosen, rule = (float(p), int(d)), "manual override"
    else:
        chosen, rule = select_cell(cells, alpha), f"min SE among p_value < {alpha}"
    return SweepResult(config.city_name, cells, chosen, rule)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in result.rows():
            w.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])


def write_sweep_json(result: SweepResult, path: str | Path) -> None:
    doc = {"city": result.city, "rule": result.rule,
           "chosen": None if result.chosen is None else {"p": result.chosen[0], "d": result.chosen[1]},
           "cells": result.rows()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
