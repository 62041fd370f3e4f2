"""Optional client for the Visual Crossing Timeline Weather API.

Responses are cached verbatim on disk, so a repeated request for the same
city and date span is served offline and parses to identical records.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
import urllib.error
import urllib.parse
import urllib.request
from pathlib import Path
from typing import Callable

from .core_types import DailyWeather, HeatNtlError, ValidationError

CREDENTIALS_ENV = "HEATNTL_WEATHER_KEY"
CACHE_ENV = "HEATNTL_WEATHER_CACHE"
BASE_URL = "https://weather.visualcrossing.com/VisualCrossingWebServices/rest/services/timeline"

# API field -> DailyWeather field
_FIELD_MAP = {
    "tempmax": "temp_max",
    "temp": "temp_avg",
    "humidity": "humidity",
    "dew": "dew",
    "cloudcover": "cloudcover",
    "precip": "precip",
    "windspeed": "windspeed",
    "solarenergy": "solarenergy",
}


class WeatherApiError(HeatNtlError):
    pass


class AuthError(WeatherApiError):
    pass


class RateLimitError(WeatherApiError):
    pass


class PayloadError(WeatherApiError):
    pass


# (url) -> (status, body)
Transport = Callable[[str], tuple[int, bytes]]


def urllib_transport(url: str, timeout: float = 60.0) -> tuple[int, bytes]:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read() or b""


def _cache_path(cache_dir: Path, city: str, start: dt.date, end: dt.date) -> Path:
    key = hashlib.sha256(f"{city}|{start.isoformat()}|{end.isoformat()}".encode()).hexdigest()[:24]
    return cache_dir / f"timeline_{key}.json"


def parse_timeline_payload(body: bytes, start: dt.date, end: dt.date) -> list[DailyWeather]:
    try:
        payload = json.loads(body)
        days = payload["days"]
    except (ValueError, KeyError, TypeError) as exc:
        raise PayloadError(f"malformed timeline payload: {exc}") from None
    records = []
    for day in days:
        try:
            values = {ours: float(day[theirs]) for theirs, ours in _FIELD_MAP.items()}
            date = dt.date.fromisoformat(day["datetime"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PayloadError(f"day record missing or bad field: {exc}") from None
        try:
            records.append(DailyWeather(date=date, **values))
        except ValidationError as exc:
            raise PayloadError(str(exc)) from None
    expected = (end - start).days + 1
    if len(records) != expected:
        raise PayloadError(f"expected {expected} days, payload has {len(records)}")
    for i, rec in enumerate(records):
        if rec.date != start + dt.timedelta(days=i):
            raise PayloadError(f"non-contiguous dates in payload at {rec.date}")
    return records


def fetch_weather(
    city: str,
    start: dt.date,
    end: dt.date,
    credentials: str | None = None,
    cache_dir: str | Path | None = None,
    transport: Transport | None = None,
) -> list[DailyWeather]:
    """Daily weather for ``city`` over the inclusive span ``start..end``."""
    if end < start:
        raise ValueError(f"end {end} precedes start {start}")
    cache_dir = Path(cache_dir or os.environ.get(CACHE_ENV, ".weather_cache"))
    cached = _cache_path(cache_dir, city, start, end)
    if cached.exists():
        return parse_timeline_payload(cached.read_bytes(), start, end)

    credentials = credentials or os.environ.get(CREDENTIALS_ENV, "")
    if not credentials:
        raise AuthError(f"no API credentials; set {CREDENTIALS_ENV}")
    query = urllib.parse.urlencode(
        {"unitGroup": "metric", "include": "days", "contentType": "json", "key": credentials}
    )
    url = f"{BASE_URL}/{urllib.parse.quote(city)}/{start.isoformat()}/{end.isoformat()}?{query}"
    status, body = (transport or urllib_transport)(url)
    if status in (401, 403):
        raise AuthError(f"authentication failed (HTTP {status})")
    if status == 429:
        raise RateLimitError("rate limit exceeded (HTTP 429)")
    if status != 200:
        raise WeatherApiError(f"unexpected HTTP status {status}")
    records = parse_timeline_payload(body, start, end)
    cache_dir.mkdir(parents=True, exist_ok=True)
    tmp = cached.with_suffix(".tmp")
    tmp.write_bytes(body)
    tmp.replace(cached)
    return records
