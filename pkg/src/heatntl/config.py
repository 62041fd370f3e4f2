"""Run configuration: one YAML file describing cities, inputs, grids and outputs.

Every key is optional except ``cities``. Defaults reproduce the baseline
setting (p = 0.80, d = 3, K = 10). Relative paths resolve against the
directory holding the config file.

Example::

    out_dir: results
    seed: 7
    defaults: {percentile_p: 0.80, duration_d: 3, k_folds: 10}
    grids: {p: [0.80, 0.85, 0.90], d: [2, 3, 4]}
    nuisance: {forest: {n_trees: 500}}
    cities:
      - name: Guangzhou
        weather: data/guangzhou_weather.csv
        ntl: data/guangzhou_ntl.csv
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .core_types import CityConfig, FeatureSpec, ValidationError
from .diagnostics.sweep import DEFAULT_D_GRID, DEFAULT_P_GRID
from .nuisance import NuisanceConfig

FORMATS = ("csv", "json")
_CITY_KEYS = {f.name for f in fields(CityConfig)} - {"city_name", "feature_spec"}


@dataclass(frozen=True)
class CityInput:
    config: CityConfig
    weather: Path
    ntl: Path
    override: tuple[float, int] | None = None  # manual sweep selection


@dataclass(frozen=True)
class RunConfig:
    cities: tuple[CityInput, ...]
    out_dir: Path = Path("out")
    p_grid: tuple[float, ...] = DEFAULT_P_GRID
    d_grid: tuple[int, ...] = DEFAULT_D_GRID
    formats: tuple[str, ...] = ("csv",)
    nuisance: NuisanceConfig = field(default_factory=NuisanceConfig)
    event_window: tuple[int, int] = (-2, 5)
    granger_max_lag: int = 7
    min_treated: int = 10
    seed: int = 0
    jobs: int = 1
    source_sha256: str = ""

    def __post_init__(self):
        if not self.cities:
            raise ValidationError("config lists no cities")
        names = [c.config.city_name for c in self.cities]
        if len(set(names)) != len(names):
            raise ValidationError("city names must be unique")
        for fmt in self.formats:
            if fmt not in FORMATS:
                raise ValidationError(f"unknown report format {fmt!r}; choose from {FORMATS}")
        if not self.p_grid or not self.d_grid:
            raise ValidationError("p and d grids must be non-empty")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")

    def check_inputs(self) -> None:
        """Every input exists and the output directory can be created."""
        for c in self.cities:
            for path in (c.weather, c.ntl):
                if not path.is_file():
                    raise ValidationError(f"input file not found: {path}")
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ValidationError(f"output directory {self.out_dir} not writable: {exc}") from None

    def with_overrides(self, *, out_dir=None, jobs=None, seed=None, formats=None) -> "RunConfig":
        """Apply command-line flags on top of the file values."""
        cfg = self
        if out_dir is not None:
            cfg = replace(cfg, out_dir=Path(out_dir))
        if jobs is not None:
            cfg = replace(cfg, jobs=int(jobs))
        if formats is not None:
            cfg = replace(cfg, formats=tuple(formats))
        if seed is not None:
            cities = tuple(replace(c, config=replace(c.config, seed=int(seed))) for c in cfg.cities)
            cfg = replace(cfg, seed=int(seed), cities=cities)
        return cfg

    def to_dict(self) -> dict:
        return {
            "out_dir": str(self.out_dir),
            "seed": self.seed,
            "p_grid": list(self.p_grid),
            "d_grid": list(self.d_grid),
            "formats": list(self.formats),
            "event_window": list(self.event_window),
            "granger_max_lag": self.granger_max_lag,
            "min_treated": self.min_treated,
            "nuisance": self.nuisance.to_dict(),
            "cities": [
                {"name": c.config.city_name, "weather": str(c.weather), "ntl": str(c.ntl),
                 "percentile_p": c.config.percentile_p, "duration_d": c.config.duration_d,
                 "k_folds": c.config.k_folds, "cdd_base": c.config.cdd_base, "seed": c.config.seed,
                 "repetitions": c.config.repetitions, "temp_column": c.config.temp_column,
                 "features": c.config.feature_spec.to_dict(),
                 "override": None if c.override is None else list(c.override)}
                for c in self.cities
            ],
        }


def _city(raw: Mapping[str, Any], defaults: Mapping[str, Any], features: Mapping | None,
          seed: int, base: Path) -> CityInput:
    raw = dict(raw)
    try:
        name = raw.pop("name")
        weather = base / raw.pop("weather")
        ntl = base / raw.pop("ntl")
    except KeyError as exc:
        raise ValidationError(f"city entry missing key {exc.args[0]!r}") from None
    override = raw.pop("override", None)
    spec = FeatureSpec.from_dict(raw.pop("features", None) or features)
    merged = {"seed": seed, **defaults, **raw}
    unknown = set(merged) - _CITY_KEYS
    if unknown:
        raise ValidationError(f"city {name!r}: unknown keys {sorted(unknown)}")
    try:
        config = CityConfig(city_name=str(name), feature_spec=spec, **merged)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"city {name!r}: {exc}") from None
    if override is not None:
        override = (float(override[0]), int(override[1]))
    return CityInput(config, weather, ntl, override)


def parse_run_config(doc: Mapping[str, Any], base: Path = Path("."), source_sha256: str = "") -> RunConfig:
    if not isinstance(doc, Mapping):
        raise ValidationError("config must be a mapping at the top level")
    known = {"out_dir", "seed", "jobs", "formats", "defaults", "grids", "nuisance", "features",
             "event_window", "granger_max_lag", "min_treated", "cities"}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown top-level keys {sorted(unknown)}")
    seed = int(doc.get("seed", 0))
    defaults = dict(doc.get("defaults") or {})
    cities = tuple(_city(c, defaults, doc.get("features"), seed, base) for c in doc.get("cities") or ())
    grids = doc.get("grids") or {}
    try:
        nuisance = NuisanceConfig.from_dict(doc.get("nuisance"))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"nuisance: {exc}") from None
    window = tuple(int(v) for v in doc.get("event_window", (-2, 5)))
    if len(window) != 2:
        raise ValidationError("event_window must be [start, end]")
    return RunConfig(
        cities=cities,
        out_dir=base / doc.get("out_dir", "out"),
        p_grid=tuple(float(v) for v in grids.get("p", DEFAULT_P_GRID)),
        d_grid=tuple(int(v) for v in grids.get("d", DEFAULT_D_GRID)),
        formats=tuple(doc.get("formats", ("csv",))),
        nuisance=nuisance,
        event_window=window,
        granger_max_lag=int(doc.get("granger_max_lag", 7)),
        min_treated=int(doc.get("min_treated", 10)),
        seed=seed,
        jobs=int(doc.get("jobs", 1)),
        source_sha256=source_sha256,
    )


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    raw = path.read_bytes()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: invalid YAML: {exc}") from None
    return parse_run_config(doc or {}, path.parent, hashlib.sha256(raw).hexdigest())
