"""Augmented Dickey-Fuller and Granger-causality tests on plain least squares."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

# MacKinnon (1994) response-surface coefficients, one I(1) series, constant only.
_TAU_MAX_C = 2.74
_TAU_MIN_C = -18.83
_TAU_STAR_C = -1.61
_TAU_C_SMALLP = (2.1659, 1.4412, 3.8269e-2)
_TAU_C_LARGEP = (1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2)

# one-sided 5% normal quantile used to trim lags
_T_STOP = 1.6448536269514722


def mackinnon_pvalue(stat: float) -> float:
    """Approximate asymptotic p-value of an ADF t-statistic (constant, no trend)."""
    if stat > _TAU_MAX_C:
        return 1.0
    if stat < _TAU_MIN_C:
        return 0.0
    coef = _TAU_C_SMALLP if stat <= _TAU_STAR_C else _TAU_C_LARGEP
    poly = sum(c * stat ** i for i, c in enumerate(coef))
    return float(stats.norm.cdf(poly))


def _ols(X: np.ndarray, y: np.ndarray):
    """Coefficients, t-values and residual sum of squares."""
    q, r = np.linalg.qr(X)
    if np.abs(np.diag(r)).min() <= 1e-10 * np.abs(np.diag(r)).max():
        raise np.linalg.LinAlgError("collinear regressors")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    dof = X.shape[0] - X.shape[1]
    rinv = np.linalg.inv(r)
    cov_diag = (rinv * rinv).sum(axis=1) * rss / dof
    return beta, beta / np.sqrt(cov_diag), rss


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int
    nobs: int
    max_lag: int


def schwert_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _adf_design(x: np.ndarray, dx: np.ndarray, k: int, first: int):
    # rows t = first .. len(dx)-1: dx[t] on [const, x[t], dx[t-1], ..., dx[t-k]]
    t = np.arange(first, dx.size)
    cols = [np.ones(t.size), x[t]] + [dx[t - j] for j in range(1, k + 1)]
    return np.column_stack(cols), dx[t]


def adf_test(series, max_lag: int | None = None) -> AdfResult:
    """ADF unit-root test with a constant.

    Starting from ``max_lag`` lagged differences (Schwert's rule by default),
    the longest lag is dropped while its |t| stays below the one-sided 5%
    normal quantile; all candidate fits share one estimation sample. The
    chosen specification is then refitted on every usable observation.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 20:
        raise ValueError(f"series too short for ADF (n={n} < 20)")
    if not np.isfinite(x).all():
        raise ValueError("series contains non-finite values")
    if np.ptp(x) == 0:
        raise ValueError("zero variance")
    limit = n // 2 - 2
    if max_lag is None:
        max_lag = min(schwert_max_lag(n), limit)
    elif max_lag > limit:
        raise ValueError(f"max_lag must be <= {limit}")
    dx = np.diff(x)

    best = 0
    for k in range(max_lag, 0, -1):
        A, y = _adf_design(x, dx, k, max_lag)
        _, tvals, _ = _ols(A, y)
        if abs(tvals[-1]) >= _T_STOP:
            best = k
            break
    A, y = _adf_design(x, dx, best, best)
    _, tvals, _ = _ols(A, y)
    stat = float(tvals[1])
    return AdfResult(stat, mackinnon_pvalue(stat), best, y.size, max_lag)


@dataclass(frozen=True)
class GrangerResult:
    f_statistic: float
    p_value: float
    lag: int
    df_num: int
    df_denom: int
    aic: tuple[float, ...] = ()


def _granger_designs(x, y, lag, first):
    t = np.arange(first, y.size)
    own = [y[t - j] for j in range(1, lag + 1)]
    other = [x[t - j] for j in range(1, lag + 1)]
    restricted = np.column_stack(own + [np.ones(t.size)])
    full = np.column_stack(own + other + [np.ones(t.size)])
    return restricted, full, y[t]


def granger_f(x, y, lag: int) -> GrangerResult:
    """F-test that ``lag`` lags of x add to ``lag`` own lags of y (with constant)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    R, U, target = _granger_designs(x, y, lag, lag)
    try:
        _, _, rss_r = _ols(R, target)
        _, _, rss_u = _ols(U, target)
    except np.linalg.LinAlgError:
        raise ValueError("collinear lag blocks") from None
    df_denom = target.size - U.shape[1]
    f = ((rss_r - rss_u) / lag) / (rss_u / df_denom)
    return GrangerResult(float(f), float(stats.f.sf(f, lag, df_denom)), lag, lag, df_denom)


def granger_test(x, y, max_lag: int) -> GrangerResult:
    """Does x help predict y? F-test at a lag order picked by AIC.

    The order minimises AIC of the own-lag autoregression of y over 1..max_lag
    on a common sample. Selecting on the restricted model keeps the choice
    blind to the x lags under test, so the F-test keeps its nominal size.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and of equal length")
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if y.size <= 3 * max_lag:
        raise ValueError(f"series length {y.size} must exceed 3 * max_lag = {3 * max_lag}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("series contain non-finite values")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("constant series")
    aics = []
    for lag in range(1, max_lag + 1):
        R, _, target = _granger_designs(x, y, lag, max_lag)
        try:
            _, _, rss = _ols(R, target)
        except np.linalg.LinAlgError:
            raise ValueError("collinear lag blocks") from None
        m = target.size
        aics.append(m * math.log(rss / m) + 2 * R.shape[1])
    lag = int(np.argmin(aics)) + 1
    res = granger_f(x, y, lag)
    return GrangerResult(res.f_statistic, res.p_value, lag, res.df_num, res.df_denom, tuple(aics))
