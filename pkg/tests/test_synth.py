import numpy as np
import pytest

from heatntl.core_types import CityConfig, join_on_date, load_ntl_csv, load_weather_csv
from heatntl.dml import DegeneracyError, ResidualSet, estimate_theta, naive_ols
from heatntl.heatwave import detect_from_weather
from heatntl.synth import (SynthCityConfig, SynthConfig, brute_force_heatwave_count, generate,
                           synth_city, write_synth_city)


def test_no_confounding_difference_in_means():
    hits = 0
    for seed in range(20):
        fm, theta = generate(SynthConfig(seed=seed, confounding_strength=0.0))
        b, se = naive_ols(fm.Y, fm.D)
        hits += abs(b - theta) <= 2 * se
    assert hits >= 17


def test_confounding_biases_naive_estimate():
    fm, theta = generate(SynthConfig(seed=0, confounding_strength=2.0))
    b, se = naive_ols(fm.Y, fm.D)
    assert (b - theta) / se > 3


def test_same_seed_same_data():
    a, _ = generate(SynthConfig(seed=4, nonlinearity="interaction"))
    b, _ = generate(SynthConfig(seed=4, nonlinearity="interaction"))
    c, _ = generate(SynthConfig(seed=5, nonlinearity="interaction"))
    assert np.array_equal(a.X, b.X) and np.array_equal(a.D, b.D) and np.array_equal(a.Y, b.Y)
    assert not np.array_equal(a.Y, c.Y)


def test_shapes_and_overlap():
    fm, theta = generate(SynthConfig(n_days=500, seed=1, confounding_strength=3.0))
    assert fm.X.shape == (500, 10) and theta == 0.5
    assert set(np.unique(fm.D)) <= {0.0, 1.0}
    assert 0.2 < fm.D.mean() < 0.8


def test_unbounded_propensity_can_degenerate():
    fm, _ = generate(SynthConfig(n_days=300, seed=2, confounding_strength=50.0, bound_propensity=False))
    # treatment becomes (almost) a deterministic function of the index
    idx = fm.X[:, :3] @ np.array([1.0, 0.5, 0.25])
    assert np.mean(fm.D == (idx > 0)) > 0.95
    with pytest.raises(DegeneracyError):
        estimate_theta(ResidualSet(fm.Y, np.zeros(fm.n)))


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(nonlinearity="cubic")
    with pytest.raises(ValueError):
        SynthConfig(noise_sd=0.0)
    with pytest.raises(ValueError):
        SynthCityConfig(n_days=50)


def test_brute_force_examples():
    assert brute_force_heatwave_count(np.arange(10.0), 0.8, 2) == 1
    temps = [5, 9, 1, 7, 8, 3]
    tau = np.quantile(temps, 0.5)
    assert brute_force_heatwave_count(temps, 0.5, 1) == sum(t >= tau for t in temps)
    assert brute_force_heatwave_count([20.0] * 12, 0.9, 4) == 9
    with pytest.raises(ValueError):
        brute_force_heatwave_count(np.zeros(10_001), 0.5, 2)


def test_synth_city_roundtrip(tmp_path):
    city = synth_city(SynthCityConfig(n_days=200, seed=3, gap_days=(5, 6)))
    assert len(city.weather) == 200 and len(city.ntl) == 198
    hw = detect_from_weather(city.weather, 0.8, 3)
    assert np.array_equal(hw.heatwave, city.heatwave)
    wpath, npath = write_synth_city(city, tmp_path)
    assert wpath.name == "synthville_weather.csv"
    ds = join_on_date(load_weather_csv(wpath), load_ntl_csv(npath))
    assert len(ds) == 198 and ds.dropped_weather == 2


def test_synth_city_weather_is_confounded():
    city = synth_city(SynthCityConfig(n_days=1500, seed=0))
    hw = city.heatwave.astype(bool)
    humidity = np.array([w.humidity for w in city.weather])
    assert humidity[hw].mean() < humidity[~hw].mean() - 5
    assert CityConfig().percentile_p == city.config.effect_p
