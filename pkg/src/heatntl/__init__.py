"""Heatwave effects on nighttime-light radiance by cross-fitted double machine learning."""

__version__ = "0.1.0"

from .climate_features import FeatureMatrix, assemble_design
from .core_types import CityConfig, CityDataset, DailyWeather, FeatureSpec, NtlDaily, join_on_date
from .dml import DmlEstimate, make_folds, p_value, run_dml, to_percent
from .heatwave import HeatwaveSeries, detect_heatwaves, heatwave_indicator

__all__ = [
    "CityConfig", "CityDataset", "DailyWeather", "DmlEstimate", "FeatureMatrix", "FeatureSpec",
    "HeatwaveSeries", "NtlDaily", "__version__", "assemble_design", "detect_heatwaves",
    "heatwave_indicator", "join_on_date", "make_folds", "p_value", "run_dml", "to_percent",
]
