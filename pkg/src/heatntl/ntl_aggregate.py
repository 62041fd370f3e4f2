"""City-level daily radiance from pixel tables of an urban mask."""

from __future__ import annotations

import csv
import datetime as dt
import logging
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .core_types import NtlDaily, RowError, SchemaError, ValidationError, HeatNtlError

logger = logging.getLogger(__name__)

PIXEL_COLUMNS = ("pixel_id", "date", "raw_radiance", "area", "quality_flag", "is_fill")


class QualityFlag(str, Enum):
    GOOD = "good_quality"
    GAP_FILLED = "gap_filled"
    POOR = "poor_quality"


class NoValidPixelsError(HeatNtlError, ValueError):
    pass


@dataclass(frozen=True)
class PixelObservation:
    pixel_id: str
    date: dt.date
    raw_radiance: float
    area: float
    quality_flag: QualityFlag = QualityFlag.GOOD
    is_fill: bool = False

    def __post_init__(self):
        if not self.area > 0:
            raise ValidationError(f"pixel {self.pixel_id} on {self.date}: area must be > 0")
        object.__setattr__(self, "quality_flag", QualityFlag(self.quality_flag))


def _usable(pixels: Iterable[PixelObservation]) -> list[PixelObservation]:
    return [px for px in pixels if not px.is_fill]


def gap_filled_fraction(pixels: Sequence[PixelObservation]) -> float:
    """Share of non-fill pixels whose radiance was gap-filled."""
    valid = _usable(pixels)
    if not valid:
        raise NoValidPixelsError("no valid pixels for date")
    n_gap = sum(px.quality_flag is QualityFlag.GAP_FILLED for px in valid)
    return n_gap / len(valid)


def aggregate_daily(pixels: Sequence[PixelObservation], scale_factor: float = 1.0) -> NtlDaily:
    """Area-weighted mean radiance over the non-fill pixels of one date."""
    if not scale_factor > 0:
        raise ValueError("scale_factor must be positive")
    if not pixels:
        raise NoValidPixelsError("no valid pixels for date")
    dates = {px.date for px in pixels}
    if len(dates) != 1:
        raise ValueError(f"aggregate_daily expects one date, got {len(dates)}")
    valid = _usable(pixels)
    if not valid:
        raise NoValidPixelsError(f"no valid pixels for date {pixels[0].date}")
    total_area = sum(px.area for px in valid)
    weighted = sum(px.raw_radiance * scale_factor * px.area for px in valid)
    return NtlDaily(date=valid[0].date, radiance=weighted / total_area,
                    gap_fraction=gap_filled_fraction(valid))


@dataclass
class AggregationReport:
    n_dates: int = 0
    skipped_dates: list[dt.date] = field(default_factory=list)
    poor_quality_counts: dict[dt.date, int] = field(default_factory=dict)
    inconsistent_pixel_dates: list[dt.date] = field(default_factory=list)


def aggregate_series(
    pixels: Iterable[PixelObservation], scale_factor: float = 1.0, skip_empty: bool = True
) -> tuple[list[NtlDaily], AggregationReport]:
    """Aggregate every date in a pixel table.

    The pixel sample is expected to stay fixed across dates; dates whose
    pixel-id set differs from the first date's raise a warning. Dates with no
    usable pixels are skipped (and listed) unless ``skip_empty`` is false.
    """
    by_date: dict[dt.date, list[PixelObservation]] = defaultdict(list)
    for px in pixels:
        by_date[px.date].append(px)
    report = AggregationReport()
    out: list[NtlDaily] = []
    reference_ids = None
    for date in sorted(by_date):
        group = by_date[date]
        ids = frozenset(px.pixel_id for px in group)
        if reference_ids is None:
            reference_ids = ids
        elif ids != reference_ids:
            report.inconsistent_pixel_dates.append(date)
        report.poor_quality_counts[date] = sum(
            px.quality_flag is QualityFlag.POOR and not px.is_fill for px in group)
        try:
            out.append(aggregate_daily(group, scale_factor))
        except NoValidPixelsError:
            if not skip_empty:
                raise
            report.skipped_dates.append(date)
    report.n_dates = len(out)
    if report.inconsistent_pixel_dates:
        warnings.warn(
            f"pixel sample differs from the first date on {len(report.inconsistent_pixel_dates)} date(s)",
            stacklevel=2,
        )
    return out, report


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "t", "yes"):
        return True
    if t in ("0", "false", "f", "no", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_pixel_csv(path: str | Path, fill_value: float | None = None) -> list[PixelObservation]:
    """Read a flat pixel table; ``fill_value`` additionally marks matching raw values as fill."""
    path = Path(path)
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for col in PIXEL_COLUMNS:
            if col not in (reader.fieldnames or []):
                raise SchemaError(f"{path}: missing column {col!r}")
        for line, row in enumerate(reader, start=2):
            try:
                is_fill = _parse_bool(row["is_fill"])
                raw = row["raw_radiance"].strip()
                radiance = float(raw) if raw else float("nan")
                if raw == "" and not is_fill:
                    raise ValueError("empty raw_radiance on a non-fill pixel")
                if fill_value is not None and radiance == fill_value:
                    is_fill = True
                out.append(PixelObservation(
                    pixel_id=row["pixel_id"].strip(),
                    date=dt.date.fromisoformat(row["date"].strip()),
                    raw_radiance=radiance,
                    area=float(row["area"]),
                    quality_flag=QualityFlag(row["quality_flag"].strip()),
                    is_fill=is_fill,
                ))
            except (ValueError, ValidationError) as exc:
                raise RowError(path, line, str(exc)) from None
    return out
