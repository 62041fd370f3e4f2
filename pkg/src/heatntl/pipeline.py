"""End-to-end run: load, detect, assemble, estimate, sweep, event study, diagnose.

Each city writes into ``<out_dir>/<city>/``. A stage that fails is logged,
the remaining stages still run, and a ``FAILED`` marker listing the failed
stages is left next to the partial outputs. ``manifest.json`` records the
config hash, seeds, software versions and a checksum of every report file;
it holds no timestamps so identical runs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__
from .climate_features import assemble_design, write_feature_csv
from .config import CityInput, RunConfig
from .core_types import join_on_date, read_ntl_csv, read_weather_csv
from .diagnostics import (diagnose, event_study, sweep, write_diagnostics_json,
                          write_event_study_csv, write_sweep_csv, write_sweep_json)
from .dml import run_dml, write_estimates_csv, write_estimates_json
from .heatwave import detect_from_weather, write_heatwave_csv

logger = logging.getLogger(__name__)

FAILED_MARKER = "FAILED"


@dataclass
class CityOutcome:
    name: str
    seed: int
    files: list[Path] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _write_estimates(estimates, stem: Path, formats) -> list[Path]:
    out = []
    if "csv" in formats:
        write_estimates_csv(estimates, stem.with_suffix(".csv"))
        out.append(stem.with_suffix(".csv"))
    if "json" in formats:
        write_estimates_json(estimates, stem.with_suffix(".json"))
        out.append(stem.with_suffix(".json"))
    return out


def run_city(city: CityInput, run: RunConfig, sweep_jobs: int | None = None) -> CityOutcome:
    cfg = city.config
    out = run.out_dir / cfg.city_name
    out.mkdir(parents=True, exist_ok=True)
    (out / FAILED_MARKER).unlink(missing_ok=True)
    result = CityOutcome(cfg.city_name, cfg.seed)

    def stage(name, fn):
        try:
            files = fn()
            result.files.extend(files)
            return True
        except Exception as exc:
            logger.error("%s: stage %s failed: %s", cfg.city_name, name, exc)
            result.failures.append(f"{name}: {type(exc).__name__}: {exc}")
            return False

    state = {}

    def load():
        weather, _ = read_weather_csv(city.weather)
        ntl, _ = read_ntl_csv(city.ntl)
        state["weather"] = weather
        state["dataset"] = join_on_date(weather, ntl)
        return []

    def heatwaves():
        full = detect_from_weather(state["weather"], cfg.percentile_p, cfg.duration_d, cfg.temp_column)
        state["hw_full"] = full
        state["hw"] = full.align(state["dataset"].dates)
        write_heatwave_csv(full, out / "heatwaves.csv")
        return [out / "heatwaves.csv"]

    def estimates():
        fm = assemble_design(state["dataset"], state["hw"], cfg)
        write_feature_csv(fm, out / "features.csv")
        files = [out / "features.csv"]
        files += _write_estimates([run_dml(fm, cfg, run.nuisance)], out / "estimates", run.formats)
        if cfg.feature_spec.include_treatment_interactions:
            # the alternative specification without functions of the treatment in X
            alt = replace(cfg, feature_spec=replace(cfg.feature_spec, include_treatment_interactions=False))
            fm_alt = assemble_design(state["dataset"], state["hw"], alt)
            files += _write_estimates([run_dml(fm_alt, alt, run.nuisance)],
                                      out / "estimates_without_treatment_interactions", run.formats)
        return files

    def sweep_stage():
        res = sweep(state["dataset"], run.p_grid, run.d_grid, cfg, run.nuisance,
                    min_treated=run.min_treated, jobs=sweep_jobs or run.jobs, override=city.override,
                    weather=state["weather"])
        files = []
        if "csv" in run.formats:
            write_sweep_csv(res, out / "sweep.csv")
            files.append(out / "sweep.csv")
        if "json" in run.formats:
            write_sweep_json(res, out / "sweep.json")
            files.append(out / "sweep.json")
        return files

    def event_stage():
        res = event_study(state["dataset"], state["hw_full"], run.event_window)
        write_event_study_csv(res, out / "event_study.csv")
        return [out / "event_study.csv"]

    def diagnose_stage():
        res = diagnose(state["dataset"], cfg.temp_column, run.granger_max_lag, cfg.city_name)
        write_diagnostics_json(res, out / "diagnostics.json")
        return [out / "diagnostics.json"]

    if stage("load", load):
        if stage("heatwaves", heatwaves):
            stage("estimates", estimates)
            stage("event_study", event_stage)
        stage("sweep", sweep_stage)
        stage("diagnostics", diagnose_stage)
    if result.failures:
        (out / FAILED_MARKER).write_text("\n".join(result.failures) + "\n")
    return result


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def software_versions() -> dict:
    return {"heatntl": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__}


def run_pipeline(run: RunConfig) -> list[CityOutcome]:
    """Process every city (up to ``run.jobs`` at once) and write the manifest."""
    run.check_inputs()
    if run.jobs > 1 and len(run.cities) > 1:
        # split the thread budget between cities and their sweep cells
        workers = min(run.jobs, len(run.cities))
        inner = max(1, run.jobs // workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda c: run_city(c, run, inner), run.cities))
    else:
        outcomes = [run_city(c, run) for c in run.cities]

    config = run.to_dict()
    config.pop("out_dir")
    manifest = {
        "software": software_versions(),
        "config_sha256": run.source_sha256,
        "config": config,
        "seeds": {o.name: o.seed for o in outcomes},
        "cities": {
            o.name: {
                "status": "ok" if o.ok else "failed",
                "failures": o.failures,
                "files": {p.relative_to(run.out_dir).as_posix(): _sha256(p) for p in o.files},
            }
            for o in outcomes
        },
    }
    (run.out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return outcomes
