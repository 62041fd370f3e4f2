import json

import numpy as np
import pytest

from conftest import FIXTURES
from heatntl.diagnostics.timeseries import (adf_test, granger_f, granger_test, mackinnon_pvalue,
                                            schwert_max_lag)


@pytest.fixture(scope="module")
def adf_cases():
    return json.loads((FIXTURES / "adf_reference.json").read_text())["cases"]


@pytest.fixture(scope="module")
def granger_cases():
    return json.loads((FIXTURES / "granger_reference.json").read_text())["cases"]


def test_adf_matches_reference(adf_cases):
    assert len(adf_cases) >= 5
    for case in adf_cases:
        res = adf_test(np.array(case["series"]), max_lag=case["max_lag"])
        assert res.statistic == pytest.approx(case["statistic"], abs=1e-4), case["kind"]
        assert res.p_value == pytest.approx(case["p_value"], abs=1e-4), case["kind"]
        assert res.lags_used == case["lags_used"]
        assert res.nobs == case["nobs"]


def test_granger_matches_reference(granger_cases):
    for case in granger_cases:
        x, y = np.array(case["x"]), np.array(case["y"])
        for ref in case["per_lag"]:
            res = granger_f(x, y, ref["lag"])
            assert res.f_statistic == pytest.approx(ref["f_statistic"], abs=1e-4)
            assert res.p_value == pytest.approx(ref["p_value"], abs=1e-4)
            assert (res.df_num, res.df_denom) == (ref["df_num"], ref["df_denom"])


def test_schwert_rule():
    assert schwert_max_lag(100) == 12
    assert schwert_max_lag(500) == 17
    assert schwert_max_lag(200) == 14


def test_mackinnon_is_monotone_probability():
    stats = np.linspace(-8, 3, 200)
    p = np.array([mackinnon_pvalue(s) for s in stats])
    assert np.all((p >= 0) & (p <= 1)) and np.all(np.diff(p) >= 0)
    # familiar asymptotic critical values for the constant-only case
    assert mackinnon_pvalue(-3.43) == pytest.approx(0.01, abs=0.002)
    assert mackinnon_pvalue(-2.86) == pytest.approx(0.05, abs=0.005)


def test_adf_errors():
    with pytest.raises(ValueError, match="zero variance"):
        adf_test(np.full(50, 3.0))
    with pytest.raises(ValueError):
        adf_test(np.arange(10.0))


def test_adf_separates_noise_from_random_walk():
    rng = np.random.default_rng(0)
    noise_rejects = walk_holds = 0
    for _ in range(40):
        e = rng.normal(size=500)
        noise_rejects += adf_test(e).p_value < 0.01
        walk_holds += adf_test(np.cumsum(rng.normal(size=500))).p_value > 0.01
    assert noise_rejects == 40 and walk_holds >= 36


def test_granger_errors():
    rng = np.random.default_rng(1)
    y = rng.normal(size=100)
    with pytest.raises(ValueError):
        granger_test(np.ones(100), y, 3)
    with pytest.raises(ValueError):
        granger_test(y[:50], y, 3)
    with pytest.raises(ValueError):
        granger_test(y[:9], y[:9], 3)
    with pytest.raises(ValueError, match="collinear"):
        granger_test(y, y, 3)


def test_granger_power():
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(50):
        x = rng.normal(size=300)
        y = np.r_[0.0, 0.8 * x[:-1]] + rng.normal(size=300)
        res = granger_test(x, y, 4)
        hits += res.p_value < 0.01
        assert len(res.aic) == 4 and 1 <= res.lag <= 4
    assert hits == 50


def test_granger_is_directional():
    rng = np.random.default_rng(3)
    x = rng.normal(size=400)
    y = np.r_[0.0, 0.8 * x[:-1]] + rng.normal(size=400)
    assert granger_test(x, y, 4).p_value < 1e-6
    assert granger_test(y, x, 4).p_value > 0.001


@pytest.mark.xfail(strict=True, reason="a correctly sized test keeps p > 0.10 for a unit root only ~90% "
                                       "of the time, so a 95% rate is not attainable")
def test_random_walk_p_above_ten_percent_at_95pct_rate():
    rng = np.random.default_rng(7)
    holds = sum(adf_test(np.cumsum(rng.normal(size=500))).p_value > 0.10 for _ in range(300))
    assert holds / 300 >= 0.95
