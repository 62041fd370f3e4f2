import datetime as dt
import json

import pytest

from heatntl.weather_api import AuthError, PayloadError, RateLimitError, fetch_weather

START = dt.date(2021, 6, 1)


def _payload(n, start=START, skip=None):
    days = []
    for i in range(n):
        if i == skip:
            continue
        days.append({"datetime": (start + dt.timedelta(days=i)).isoformat(), "tempmax": 31.0 + i % 3,
                     "temp": 26.0, "humidity": 70.0, "dew": 20.0, "cloudcover": 30.0, "precip": 0.0,
                     "windspeed": 12.0, "solarenergy": 20.0})
    return json.dumps({"days": days}).encode()


class FakeTransport:
    def __init__(self, status=200, body=b""):
        self.status, self.body, self.calls = status, body, []

    def __call__(self, url):
        self.calls.append(url)
        return self.status, self.body


def test_thirty_days_contiguous(tmp_path):
    end = START + dt.timedelta(days=29)
    t = FakeTransport(body=_payload(30))
    recs = fetch_weather("Cairo", START, end, credentials="k", cache_dir=tmp_path, transport=t)
    assert len(recs) == 30
    assert [r.date for r in recs] == [START + dt.timedelta(days=i) for i in range(30)]
    assert recs[0].temp_avg == 26.0 and "key=k" in t.calls[0]


def test_cache_hit_is_offline_and_identical(tmp_path):
    end = START + dt.timedelta(days=9)
    t = FakeTransport(body=_payload(10))
    first = fetch_weather("Delhi", START, end, credentials="k", cache_dir=tmp_path, transport=t)
    cached = list(tmp_path.iterdir())
    assert len(cached) == 1 and cached[0].read_bytes() == _payload(10)

    def offline(url):
        raise AssertionError("network used on a cache hit")

    second = fetch_weather("Delhi", START, end, credentials=None, cache_dir=tmp_path, transport=offline)
    assert first == second


def test_end_before_start():
    with pytest.raises(ValueError):
        fetch_weather("x", START, START - dt.timedelta(days=1), credentials="k")


@pytest.mark.parametrize("status,exc", [(401, AuthError), (403, AuthError), (429, RateLimitError)])
def test_http_errors_are_typed(tmp_path, status, exc):
    with pytest.raises(exc):
        fetch_weather("x", START, START, credentials="k", cache_dir=tmp_path,
                      transport=FakeTransport(status=status))
    assert not list(tmp_path.iterdir())


def test_missing_credentials(tmp_path, monkeypatch):
    monkeypatch.delenv("HEATNTL_WEATHER_KEY", raising=False)
    with pytest.raises(AuthError):
        fetch_weather("x", START, START, cache_dir=tmp_path, transport=FakeTransport(body=_payload(1)))


@pytest.mark.parametrize("body", [b"not json", b'{"nodays": []}', _payload(5, skip=2), _payload(4)])
def test_malformed_or_partial_payload(tmp_path, body):
    end = START + dt.timedelta(days=4)
    with pytest.raises(PayloadError):
        fetch_weather("x", START, end, credentials="k", cache_dir=tmp_path, transport=FakeTransport(body=body))
    assert not list(tmp_path.glob("*.json"))
