"""Stationarity and temporal-association checks, the (p, d) sweep and the event study."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from ..core_types import CityDataset
from .event_study import EventStudyResult, NoCompleteEventsError, event_study, write_event_study_csv
from .sweep import (DEFAULT_D_GRID, DEFAULT_P_GRID, INSUFFICIENT, SweepCell, SweepResult, select_cell,
                    sweep, write_sweep_csv, write_sweep_json)
from .timeseries import AdfResult, GrangerResult, adf_test, granger_test, mackinnon_pvalue


@dataclass(frozen=True)
class DiagnosticsSummary:
    city: str
    adf_log_ntl: AdfResult
    adf_temperature: AdfResult
    granger_temp_to_ntl: GrangerResult
    granger_ntl_to_temp: GrangerResult

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("granger_temp_to_ntl", "granger_ntl_to_temp"):
            out[k]["aic"] = list(out[k]["aic"])
        return out


def diagnose(dataset: CityDataset, temp_column: str = "temp_avg", max_lag: int = 7,
             city: str = "") -> DiagnosticsSummary:
    """ADF on ln NTL and temperature; Granger in both directions.

    Rows are taken in date order as consecutive observations.
    """
    y = dataset.log_radiance()
    t = dataset.column(temp_column)
    return DiagnosticsSummary(
        city=city,
        adf_log_ntl=adf_test(y),
        adf_temperature=adf_test(t),
        granger_temp_to_ntl=granger_test(t, y, max_lag),
        granger_ntl_to_temp=granger_test(y, t, max_lag),
    )


def write_diagnostics_json(summary: DiagnosticsSummary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary.to_dict(), indent=2) + "\n")


__all__ = [
    "AdfResult", "DEFAULT_D_GRID", "DEFAULT_P_GRID", "DiagnosticsSummary", "EventStudyResult",
    "GrangerResult", "INSUFFICIENT", "NoCompleteEventsError", "SweepCell", "SweepResult", "adf_test",
    "diagnose", "event_study", "granger_test", "mackinnon_pvalue", "select_cell", "sweep",
    "write_diagnostics_json", "write_event_study_csv", "write_sweep_csv", "write_sweep_json",
]
