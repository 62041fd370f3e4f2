"""Acceptance criteria, one test each, each printing a PASS/FAIL line."""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE, FIXTURES, event_fixture, record_criterion
from heatntl.cli import main
from heatntl.core_types import CityConfig, load_weather_csv
from heatntl.diagnostics.event_study import event_study
from heatntl.diagnostics.timeseries import adf_test, granger_f, granger_test
from heatntl.dml import naive_ols, p_value, run_dml, to_percent
from heatntl.heatwave import detect_from_weather, heatwave_indicator, hot_day_indicator, percentile_threshold
from heatntl.nuisance import ForestLearner, NuisanceConfig
from heatntl.nuisance.lasso import fit_lasso, lambda_max, soft_threshold
from heatntl.synth import SynthConfig, brute_force_heatwave_count, generate
from test_cli import write_run

Z95 = 1.959963984540054

# city, percent increase, SE, p-value
TABLE2 = [
    ("Sao Paulo", 59.44, 0.1486, 0.0016),
    ("Delhi", 14.04, 0.0564, 0.0198),
    ("Cairo", 263.42, 0.4966, 0.0093),
    ("Guangzhou", 72.95, 0.2384, 0.0215),
]


def test_c1_table2_round_trip():
    t0 = time.perf_counter()
    worst_pct = worst_p = 0.0
    for _, pct, se, pv in TABLE2:
        theta = math.log1p(pct / 100)
        worst_pct = max(worst_pct, abs(to_percent(theta) - pct))
        worst_p = max(worst_p, abs(p_value(theta, se) - pv))
    elapsed = time.perf_counter() - t0
    ok = worst_pct <= 0.01 and worst_p <= 0.0005 and elapsed < 1
    record_criterion("C1 table round-trip", ok,
                     f"max |dpct|={worst_pct:.2e} max |dp|={worst_p:.2e} in {elapsed:.3f}s")
    assert ok


def test_c2_heatwave_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 61))
        # rounded temperatures exercise ties at the threshold
        temps = np.round(rng.normal(25, 5, n), int(rng.integers(0, 2)))
        for p in (0.80, 0.85, 0.90):
            hot = hot_day_indicator(temps, percentile_threshold(temps, p).tau)
            for d in (1, 2, 3, 4):
                mismatches += int(heatwave_indicator(hot, d).sum()) != brute_force_heatwave_count(temps, p, d)
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 10
    record_criterion("C2 heatwave oracle", ok, f"{mismatches} mismatches over 12000 cases in {elapsed:.2f}s")
    assert ok


def test_c3_lasso_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(33)
    ols_err = 0.0
    for _ in range(20):
        n, p = int(rng.integers(50, 400)), int(rng.integers(2, 15))
        X = rng.normal(size=(n, p)) * rng.uniform(0.5, 4, p) + rng.normal(0, 2, p)
        y = rng.normal() + X @ rng.normal(size=p) + rng.normal(0, 1, n)
        m = fit_lasso(X, y, lambda_grid=[0.0], tol=1e-13, max_sweeps=100_000)
        A = np.column_stack([np.ones(n), X])
        ref = np.linalg.solve(A.T @ A, A.T @ y)
        ols_err = max(ols_err, abs(m.intercept_original - ref[0]), np.max(np.abs(m.coef_original - ref[1:])))
        lm = lambda_max(X, y)
        zeros_ok = all(np.all(fit_lasso(X, y, lambda_grid=[lam]).coef == 0.0) for lam in (lm, 1.5 * lm))
        if not zeros_ok:
            break

    ortho_err = 0.0
    for seed in range(5):
        r = np.random.default_rng(seed)
        n, p = 150, 6
        A = r.normal(size=(n, p))
        Q, _ = np.linalg.qr(np.column_stack([np.ones(n), A - A.mean(axis=0)]))
        Z = Q[:, 1:] * np.sqrt(n)
        y = Z @ r.normal(size=p) + r.normal(size=n)
        for lam in (0.01, 0.2, 0.7, 2.0):
            m = fit_lasso(Z, y, lambda_grid=[lam], tol=1e-13)
            expected = np.array([soft_threshold(Z[:, j] @ (y - y.mean()) / n, lam) for j in range(p)])
            ortho_err = max(ortho_err, np.max(np.abs(m.coef - expected)))
    elapsed = time.perf_counter() - t0
    ok = ols_err <= 1e-6 and zeros_ok and ortho_err <= 1e-8 and elapsed < 30
    record_criterion("C3 lasso", ok, f"OLS err={ols_err:.1e} zeros at lambda_max={zeros_ok} "
                                     f"orthonormal err={ortho_err:.1e} in {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_c4_dml_recovery_monte_carlo():
    # forest sized for a single core; see the decisions ledger
    learners = NuisanceConfig(forest=ForestLearner(n_trees=50, min_node=50))
    t0 = time.perf_counter()
    theta, se = np.empty(200), np.empty(200)
    for s in range(200):
        fm, _ = generate(SynthConfig(n_days=2000, true_theta=0.5, seed=s))
        est = run_dml(fm, CityConfig(k_folds=10, seed=s), learners)
        theta[s], se[s] = est.theta, est.se
    elapsed = time.perf_counter() - t0
    within = float(np.mean(np.abs(theta - 0.5) <= 2 * se))
    cover = float(np.mean(np.abs(theta - 0.5) <= Z95 * se))
    ok = within >= 0.90 and 0.90 <= cover <= 0.98 and elapsed < 600
    record_criterion("C4 DML recovery", ok, f"within 2SE={within:.3f} CI95 coverage={cover:.3f} "
                                            f"bias={theta.mean() - 0.5:+.4f} in {elapsed:.0f}s")
    assert ok


def test_c5_orthogonality_bias():
    learners = NuisanceConfig(forest=ForestLearner(n_trees=100, min_node=20))
    t0 = time.perf_counter()
    naive_biased = covered = 0
    covered_seed0 = False
    for s in range(10):
        fm, theta = generate(SynthConfig(seed=s, confounding_strength=2.0))
        b, b_se = naive_ols(fm.Y, fm.D)
        naive_biased += abs(b - theta) > 3 * b_se
        est = run_dml(fm, CityConfig(k_folds=10, seed=s), learners)
        hit = abs(est.theta - theta) <= Z95 * est.se
        covered += hit
        covered_seed0 = covered_seed0 or (s == 0 and hit)
    elapsed = time.perf_counter() - t0
    ok = naive_biased == 10 and covered_seed0 and covered >= 8 and elapsed < 120
    record_criterion("C5 orthogonality", ok, f"naive biased >3SE {naive_biased}/10, DML covers "
                                             f"{covered}/10 (seed 0: {covered_seed0}) in {elapsed:.1f}s")
    assert ok


def test_c6_event_study_fidelity():
    t0 = time.perf_counter()
    ds, hw = event_fixture()
    res = event_study(ds, hw)
    target = np.where(res.offsets >= 3, 0.2, 0.0)
    err = float(np.max(np.abs(res.effect - target)))
    elapsed = time.perf_counter() - t0
    ok = err <= 0.03 and elapsed < 10
    record_criterion("C6 event study", ok, f"max deviation {err:.4f} over {res.n_events} events in {elapsed:.2f}s")
    assert ok


def test_c7_statistical_test_calibration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    noise_rej = walk_hold = 0
    for _ in range(500):
        noise_rej += adf_test(rng.normal(size=500)).p_value < 0.01
        walk_hold += adf_test(np.cumsum(rng.normal(size=500))).p_value > 0.01
    size = 0
    for _ in range(1000):
        size += granger_test(rng.normal(size=200), rng.normal(size=200), 4).p_value < 0.05
    fixture_err = 0.0
    for case in json.loads((FIXTURES / "adf_reference.json").read_text())["cases"]:
        r = adf_test(np.array(case["series"]), max_lag=case["max_lag"])
        fixture_err = max(fixture_err, abs(r.statistic - case["statistic"]), abs(r.p_value - case["p_value"]))
    for case in json.loads((FIXTURES / "granger_reference.json").read_text())["cases"]:
        for ref in case["per_lag"]:
            r = granger_f(np.array(case["x"]), np.array(case["y"]), ref["lag"])
            fixture_err = max(fixture_err, abs(r.f_statistic - ref["f_statistic"]),
                              abs(r.p_value - ref["p_value"]))
    elapsed = time.perf_counter() - t0
    ok = (noise_rej >= 495 and walk_hold >= 475 and 20 <= size <= 80 and fixture_err <= 1e-4
          and elapsed < 300)
    record_criterion("C7 test calibration", ok,
                     f"ADF noise rejects {noise_rej}/500, walk holds {walk_hold}/500 at 1%; "
                     f"Granger size {size / 10:.1f}%; fixture err {fixture_err:.1e} in {elapsed:.1f}s")
    assert ok


REAL_DATA = os.environ.get("HEATNTL_REAL_DATA")
# city file stem, p, {d: reported heatwave days}
REPORTED_COUNTS = [("guangzhou", 0.80, {3: 294, 4: 220}), ("sao_paulo", 0.90, {3: 92, 4: 63})]


def test_c8_reported_heatwave_counts():
    root = Path(REAL_DATA) if REAL_DATA else None
    missing = [f"{s}_weather.csv" for s, _, _ in REPORTED_COUNTS
               if root is None or not (root / f"{s}_weather.csv").is_file()]
    if missing:
        ACCEPTANCE.append("SKIP C8 reported counts: no real city data (set HEATNTL_REAL_DATA "
                          "to a directory holding " + ", ".join(missing) + ")")
        pytest.skip("real city data absent")
    lines, ok = [], True
    for stem, p, counts in REPORTED_COUNTS:
        path = root / f"{stem}_weather.csv"
        weather = load_weather_csv(path)
        for d, reported in counts.items():
            got = int(detect_from_weather(weather, p, d).heatwave.sum())
            ok &= abs(got - reported) <= 0.05 * reported
            lines.append(f"{stem} p={p} d={d}: {got} vs {reported}")
    record_criterion("C8 reported counts", ok, "; ".join(lines))
    assert ok


def test_c9_end_to_end_determinism(tmp_path):
    cfg = write_run(tmp_path, cities=("alpha", "beta"))
    t0 = time.perf_counter()
    codes = [main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / r)]) for r in ("r1", "r2")]
    elapsed = time.perf_counter() - t0
    files = sorted(p.relative_to(tmp_path / "r1") for p in (tmp_path / "r1").rglob("*") if p.is_file())
    differ = [str(f) for f in files if (tmp_path / "r1" / f).read_bytes() != (tmp_path / "r2" / f).read_bytes()]
    ok = codes == [0, 0] and len(files) > 0 and not differ and elapsed < 60
    record_criterion("C9 determinism", ok, f"{len(files)} files, {len(differ)} differ, "
                                           f"two runs in {elapsed:.1f}s")
    assert ok
