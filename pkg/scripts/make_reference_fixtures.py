"""Write ADF and Granger reference values computed by statsmodels.

Run once; the JSON output is committed under tests/fixtures/ and the test
suite compares the package's own implementations against it. statsmodels
is only needed here (``pip install .[fixtures]``).

    python3 scripts/make_reference_fixtures.py [--out tests/fixtures]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np
import statsmodels
from statsmodels.tsa.stattools import adfuller, grangercausalitytests

from heatntl.diagnostics.timeseries import schwert_max_lag


def _series(kind: str, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    if kind == "white_noise":
        return e
    if kind == "random_walk":
        return np.cumsum(e)
    if kind == "ar1":
        x = np.empty(n)
        x[0] = e[0]
        for t in range(1, n):
            x[t] = 0.6 * x[t - 1] + e[t]
        return x
    if kind == "ar2":
        x = np.zeros(n)
        for t in range(2, n):
            x[t] = 0.5 * x[t - 1] + 0.3 * x[t - 2] + e[t]
        return x + 3.0
    raise ValueError(kind)


def adf_cases(n: int = 200) -> list[dict]:
    out = []
    for seed, kind in enumerate(("white_noise", "random_walk", "ar1", "ar2", "ar1", "random_walk")):
        x = _series(kind, n, 100 + seed)
        max_lag = schwert_max_lag(n)
        stat, p, lag, nobs, *_ = adfuller(x, maxlag=max_lag, regression="c", autolag="t-stat")
        out.append({"kind": kind, "seed": 100 + seed, "max_lag": max_lag, "series": x.tolist(),
                    "statistic": float(stat), "p_value": float(p), "lags_used": int(lag),
                    "nobs": int(nobs)})
    return out


def granger_cases(n: int = 200, max_lag: int = 4) -> list[dict]:
    out = []
    for seed, coupling in enumerate((0.0, 0.3, 0.8)):
        rng = np.random.default_rng(200 + seed)
        x = rng.standard_normal(n)
        y = np.empty(n)
        y[0] = rng.standard_normal()
        for t in range(1, n):
            y[t] = 0.4 * y[t - 1] + coupling * x[t - 1] + rng.standard_normal()
        res = grangercausalitytests(np.column_stack([y, x]), maxlag=max_lag, verbose=False)
        per_lag = []
        for lag in range(1, max_lag + 1):
            f, p, df_denom, df_num = res[lag][0]["ssr_ftest"]
            per_lag.append({"lag": lag, "f_statistic": float(f), "p_value": float(p),
                            "df_denom": int(df_denom), "df_num": int(df_num)})
        out.append({"coupling": coupling, "seed": 200 + seed, "x": x.tolist(), "y": y.tolist(),
                    "max_lag": max_lag, "per_lag": per_lag})
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests" / "fixtures")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    meta = {"generator": "statsmodels", "version": statsmodels.__version__}
    (args.out / "adf_reference.json").write_text(json.dumps({**meta, "cases": adf_cases()}, indent=1) + "\n")
    (args.out / "granger_reference.json").write_text(
        json.dumps({**meta, "cases": granger_cases()}, indent=1) + "\n")
    print(f"wrote fixtures to {args.out}")


if __name__ == "__main__":
    main()
