"""Domain records, CSV ingestion and date alignment shared by the pipeline."""

from __future__ import annotations

import csv
import datetime as dt
import functools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class HeatNtlError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(HeatNtlError):
    """Input table is missing a declared column."""


class ValidationError(HeatNtlError, ValueError):
    """A record violates a domain invariant."""


class RowError(HeatNtlError, ValueError):
    """A CSV cell could not be parsed."""

    def __init__(self, path: str | Path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


WEATHER_FIELDS = (
    "temp_max",
    "temp_avg",
    "humidity",
    "dew",
    "cloudcover",
    "precip",
    "windspeed",
    "solarenergy",
)

# canonical field -> CSV header
DEFAULT_WEATHER_SCHEMA: dict[str, str] = {
    "date": "date",
    "temp_max": "tempmax",
    "temp_avg": "tempavg",
    "humidity": "humidity",
    "dew": "dew",
    "cloudcover": "cloudcover",
    "precip": "precip",
    "windspeed": "windspeed",
    "solarenergy": "solarenergy",
    "cdd": "cdd",
}
NTL_COLUMNS = ("date", "radiance", "gap_fraction")


@dataclass(frozen=True)
class DailyWeather:
    date: dt.date
    temp_max: float
    temp_avg: float
    humidity: float
    dew: float
    cloudcover: float
    precip: float
    windspeed: float
    solarenergy: float
    cdd: float | None = None

    def __post_init__(self):
        for name in WEATHER_FIELDS:
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{self.date}: {name} is not finite")
        if not 0.0 <= self.humidity <= 100.0:
            raise ValidationError(f"{self.date}: humidity out of range ({self.humidity})")
        if not 0.0 <= self.cloudcover <= 100.0:
            raise ValidationError(f"{self.date}: cloudcover out of range ({self.cloudcover})")
        for name in ("precip", "windspeed", "solarenergy"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{self.date}: {name} must be non-negative")
        if self.dew > self.temp_max:
            raise ValidationError(f"{self.date}: dew point {self.dew} above temp_max {self.temp_max}")
        if self.cdd is not None and not (math.isfinite(self.cdd) and self.cdd >= 0):
            raise ValidationError(f"{self.date}: cdd must be finite and non-negative")


@dataclass(frozen=True)
class NtlDaily:
    date: dt.date
    radiance: float
    gap_fraction: float

    def __post_init__(self):
        if not (math.isfinite(self.radiance) and self.radiance > 0):
            raise ValidationError(f"{self.date}: radiance must be strictly positive, got {self.radiance}")
        if not 0.0 <= self.gap_fraction <= 1.0:
            raise ValidationError(f"{self.date}: gap_fraction out of range ({self.gap_fraction})")


@dataclass(frozen=True)
class FeatureSpec:
    """Which covariates enter the design matrix.

    ``lags`` maps a weather field to the day offsets to include; ``interactions``
    lists column pairs multiplied elementwise. ``"heatwave"`` refers to the
    treatment indicator.
    """

    base: tuple[str, ...] = (
        "cdd",
        "temp_max",
        "humidity",
        "dew",
        "cloudcover",
        "precip",
        "windspeed",
        "solarenergy",
    )
    lags: tuple[tuple[str, tuple[int, ...]], ...] = (
        ("cdd", (1, 2, 3)),
        ("humidity", (1,)),
        ("temp_avg", (1, 2)),
    )
    interactions: tuple[tuple[str, str], ...] = (
        ("heatwave", "humidity"),
        ("heatwave", "solarenergy"),
        ("temp_max", "cloudcover"),
    )
    include_treatment_interactions: bool = True

    @property
    def max_lag(self) -> int:
        return max((max(offs) for _, offs in self.lags if offs), default=0)

    def active_interactions(self) -> tuple[tuple[str, str], ...]:
        if self.include_treatment_interactions:
            return self.interactions
        return tuple(pair for pair in self.interactions if "heatwave" not in pair)

    @classmethod
    def from_dict(cls, raw: Mapping | None) -> "FeatureSpec":
        if not raw:
            return cls()
        kwargs = {}
        if "base" in raw:
            kwargs["base"] = tuple(raw["base"])
        if "lags" in raw:
            kwargs["lags"] = tuple((k, tuple(int(i) for i in v)) for k, v in raw["lags"].items())
        if "interactions" in raw:
            kwargs["interactions"] = tuple(tuple(pair) for pair in raw["interactions"])
        if "include_treatment_interactions" in raw:
            kwargs["include_treatment_interactions"] = bool(raw["include_treatment_interactions"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "base": list(self.base),
            "lags": {k: list(v) for k, v in self.lags},
            "interactions": [list(p) for p in self.interactions],
            "include_treatment_interactions": self.include_treatment_interactions,
        }


@dataclass(frozen=True)
class CityConfig:
    city_name: str = "city"
    percentile_p: float = 0.80
    duration_d: int = 3
    cdd_base: float = 18.0
    k_folds: int = 10
    seed: int = 0
    feature_spec: FeatureSpec = field(default_factory=FeatureSpec)
    temp_column: str = "temp_avg"
    repetitions: int = 1

    def __post_init__(self):
        if not 0.0 < self.percentile_p < 1.0:
            raise ValueError(f"percentile_p must lie in (0, 1), got {self.percentile_p}")
        if self.duration_d < 1:
            raise ValueError(f"duration_d must be >= 1, got {self.duration_d}")
        if self.k_folds < 2:
            raise ValueError(f"k_folds must be >= 2, got {self.k_folds}")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.temp_column not in ("temp_avg", "temp_max"):
            raise ValueError(f"temp_column must be temp_avg or temp_max, got {self.temp_column!r}")


@dataclass(frozen=True)
class CityDataset:
    """Weather and NTL records retained after an inner join on date."""

    weather: tuple[DailyWeather, ...]
    ntl: tuple[NtlDaily, ...]
    dropped_weather: int = 0
    dropped_ntl: int = 0

    def __post_init__(self):
        if len(self.weather) != len(self.ntl):
            raise ValidationError("weather and ntl must have equal length after join")
        for w, n in zip(self.weather, self.ntl):
            if w.date != n.date:
                raise ValidationError(f"misaligned records: {w.date} vs {n.date}")

    def __len__(self) -> int:
        return len(self.weather)

    @functools.cached_property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(w.date for w in self.weather)

    @property
    def start(self) -> dt.date:
        return self.weather[0].date

    @property
    def end(self) -> dt.date:
        return self.weather[-1].date

    def column(self, name: str) -> np.ndarray:
        if name in ("radiance", "gap_fraction"):
            return np.array([getattr(r, name) for r in self.ntl], dtype=float)
        return np.array([getattr(r, name) for r in self.weather], dtype=float)

    def log_radiance(self) -> np.ndarray:
        rad = self.column("radiance")
        require_positive_radiance(rad)
        return np.log(rad)


def require_positive_radiance(radiance: np.ndarray) -> None:
    bad = ~(np.asarray(radiance) > 0)
    if bad.any():
        raise ValidationError(f"{int(bad.sum())} day(s) with radiance <= 0; log outcome undefined")


@dataclass
class LoadReport:
    path: str
    rows_read: int = 0
    rejected_lines: list[int] = field(default_factory=list)


def _parse_date(text: str, path, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise RowError(path, line, f"unparseable date {text!r}") from None


def _parse_float(text: str, column: str, path, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise RowError(path, line, f"unparseable value {text!r} in column {column!r}") from None


def _read_rows(path: Path, required: Iterable[str]):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        # line 1 is the header
        for line, row in enumerate(reader, start=2):
            yield line, row, header


def _sorted_unique(records: list, path) -> list:
    records.sort(key=lambda r: r.date)
    for prev, cur in zip(records, records[1:]):
        if prev.date == cur.date:
            raise ValidationError(f"{path}: duplicate date {cur.date}")
    return records


def read_weather_csv(
    path: str | Path, schema: Mapping[str, str] | None = None
) -> tuple[list[DailyWeather], LoadReport]:
    """Parse a weather CSV, returning date-sorted records and a load report.

    Rows with an empty required cell are rejected and listed in the report;
    a non-empty cell that does not parse raises :class:`RowError`.
    """
    path = Path(path)
    cols = dict(DEFAULT_WEATHER_SCHEMA)
    if schema:
        cols.update(schema)
    required = ["date", *WEATHER_FIELDS]
    report = LoadReport(str(path))
    records: list[DailyWeather] = []
    has_cdd = None
    for line, row, header in _read_rows(path, [cols[f] for f in required]):
        if has_cdd is None:
            has_cdd = cols["cdd"] in header
        report.rows_read += 1
        cells = {f: (row.get(cols[f]) or "").strip() for f in required}
        if any(v == "" for v in cells.values()):
            report.rejected_lines.append(line)
            continue
        values = {f: _parse_float(cells[f], cols[f], path, line) for f in WEATHER_FIELDS}
        cdd = None
        if has_cdd:
            raw = (row.get(cols["cdd"]) or "").strip()
            if raw:
                cdd = _parse_float(raw, cols["cdd"], path, line)
        try:
            rec = DailyWeather(date=_parse_date(cells["date"], path, line), cdd=cdd, **values)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line}: {exc}") from None
        records.append(rec)
    if report.rejected_lines:
        logger.warning("%s: rejected %d row(s) with missing values (lines %s)",
                       path, len(report.rejected_lines), report.rejected_lines[:10])
    return _sorted_unique(records, path), report


def load_weather_csv(path: str | Path, schema: Mapping[str, str] | None = None) -> list[DailyWeather]:
    return read_weather_csv(path, schema)[0]


def read_ntl_csv(path: str | Path) -> tuple[list[NtlDaily], LoadReport]:
    path = Path(path)
    report = LoadReport(str(path))
    records: list[NtlDaily] = []
    for line, row, _ in _read_rows(path, NTL_COLUMNS):
        report.rows_read += 1
        cells = {c: (row.get(c) or "").strip() for c in NTL_COLUMNS}
        if any(v == "" for v in cells.values()):
            report.rejected_lines.append(line)
            continue
        try:
            rec = NtlDaily(
                date=_parse_date(cells["date"], path, line),
                radiance=_parse_float(cells["radiance"], "radiance", path, line),
                gap_fraction=_parse_float(cells["gap_fraction"], "gap_fraction", path, line),
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line}: {exc}") from None
        records.append(rec)
    if report.rejected_lines:
        logger.warning("%s: rejected %d row(s) with missing values", path, len(report.rejected_lines))
    return _sorted_unique(records, path), report


def load_ntl_csv(path: str | Path) -> list[NtlDaily]:
    return read_ntl_csv(path)[0]


def join_on_date(weather: Sequence[DailyWeather], ntl: Sequence[NtlDaily]) -> CityDataset:
    """Inner-join weather and NTL records on calendar day."""
    for name, recs in (("weather", weather), ("ntl", ntl)):
        if any(a.date >= b.date for a, b in zip(recs, recs[1:])):
            raise ValidationError(f"{name} records must be strictly increasing in date")
    ntl_by_date = {r.date: r for r in ntl}
    kept_w = [w for w in weather if w.date in ntl_by_date]
    if not kept_w:
        raise ValidationError("no overlapping dates")
    kept_n = [ntl_by_date[w.date] for w in kept_w]
    dropped_w = len(weather) - len(kept_w)
    dropped_n = len(ntl) - len(kept_n)
    if dropped_w or dropped_n:
        logger.info("join dropped %d weather and %d ntl day(s)", dropped_w, dropped_n)
    return CityDataset(tuple(kept_w), tuple(kept_n), dropped_w, dropped_n)


def fmt_float(x: float) -> str:
    """Shortest round-trip text for a float; stable across runs."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def write_weather_csv(records: Sequence[DailyWeather], path: str | Path, include_cdd: bool = True) -> None:
    cols = [DEFAULT_WEATHER_SCHEMA[f] for f in ("date", *WEATHER_FIELDS)]
    if include_cdd:
        cols.append("cdd")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            row = [r.date.isoformat()] + [fmt_float(getattr(r, f)) for f in WEATHER_FIELDS]
            if include_cdd:
                row.append("" if r.cdd is None else fmt_float(r.cdd))
            w.writerow(row)


def write_ntl_csv(records: Sequence[NtlDaily], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NTL_COLUMNS)
        for r in records:
            w.writerow([r.date.isoformat(), fmt_float(r.radiance), fmt_float(r.gap_fraction)])
