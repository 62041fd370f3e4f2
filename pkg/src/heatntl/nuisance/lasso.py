"""L1-penalised least squares by cyclic coordinate descent.

Objective on standardised columns ``z_j``::

    (1 / 2n) * ||y - b0 - Z beta||^2 + lam * sum_j |beta_j|

This is the usual glmnet scaling: the penalty at which every coefficient is
zero is ``max_j |<z_j, y - mean(y)>| / n``. Sweeps use covariance updates,
so each costs O(p^2) regardless of n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np


def soft_threshold(z: float, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    return float(np.sign(z) * max(abs(z) - gamma, 0.0))


@numba.njit(cache=True, nogil=True)
def _cd_path(G, c, lambdas, beta0, tol, max_sweeps):
    p = G.shape[0]
    n_lam = lambdas.shape[0]
    coefs = np.zeros((n_lam, p))
    sweeps = np.zeros(n_lam, dtype=np.int64)
    beta = beta0.copy()
    Gb = G @ beta
    for li in range(n_lam):
        lam = lambdas[li]
        done = 0
        for it in range(max_sweeps):
            max_delta = 0.0
            for j in range(p):
                gjj = G[j, j]
                if gjj <= 0.0:
                    continue
                old = beta[j]
                z = c[j] - Gb[j] + gjj * old
                if z > lam:
                    new = (z - lam) / gjj
                elif z < -lam:
                    new = (z + lam) / gjj
                else:
                    new = 0.0
                delta = new - old
                if delta != 0.0:
                    for k in range(p):
                        Gb[k] += G[k, j] * delta
                    beta[j] = new
                    if abs(delta) > max_delta:
                        max_delta = abs(delta)
            done = it + 1
            if max_delta < tol:
                break
        coefs[li, :] = beta
        sweeps[li] = done
    return coefs, sweeps


@dataclass(frozen=True)
class LassoModel:
    coef: np.ndarray  # on standardised columns
    intercept: float
    lam: float
    center: np.ndarray
    scale: np.ndarray
    lambda_grid: np.ndarray = field(default_factory=lambda: np.empty(0))
    cv_mse: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        return self.coef.size

    @property
    def coef_original(self) -> np.ndarray:
        return self.coef / self.scale

    @property
    def intercept_original(self) -> float:
        return float(self.intercept - self.center @ self.coef_original)

    def predict(self, X) -> np.ndarray:
        return predict_lasso(self, X)

    def to_dict(self) -> dict:
        return {
            "kind": "lasso",
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "lambda": self.lam,
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
        }


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ValueError(f"shape mismatch: X{X.shape}, y{y.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("X and y must be finite")
    return X, y


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Centre columns and scale to unit (population) variance; constant columns stay zero."""
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (X - center) / scale, center, scale


def _gram(Z: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = Z.shape[0]
    G = Z.T @ Z / n
    c = Z.T @ (y - y.mean()) / n
    return np.ascontiguousarray(G), c


def lambda_max(X, y) -> float:
    """Smallest penalty at which all standardised coefficients vanish."""
    X, y = _check_xy(X, y)
    Z, _, _ = standardize(X)
    _, c = _gram(Z, y)
    return float(np.max(np.abs(c))) if c.size else 0.0


def lambda_path(lam_max: float, n_lambda: int = 100, ratio: float = 1e-3) -> np.ndarray:
    if lam_max <= 0:
        return np.zeros(1)
    return np.logspace(np.log10(lam_max), np.log10(lam_max * ratio), n_lambda)


def lasso_path(X, y, lambdas, tol: float = 1e-7, max_sweeps: int = 10000,
               beta0: np.ndarray | None = None):
    """Coefficients (standardised scale) along ``lambdas`` with warm starts.

    Returns ``(coefs, center, scale, sweeps)``; ``coefs`` has one row per penalty.
    """
    X, y = _check_xy(X, y)
    Z, center, scale = standardize(X)
    G, c = _gram(Z, y)
    lambdas = np.asarray(lambdas, dtype=float)
    if (lambdas < 0).any():
        raise ValueError("penalties must be non-negative")
    b0 = np.zeros(X.shape[1]) if beta0 is None else np.asarray(beta0, dtype=float)
    coefs, sweeps = _cd_path(G, c, lambdas, b0, tol, max_sweeps)
    return coefs, center, scale, sweeps


def lasso_objective(X, y, coef: np.ndarray, lam: float) -> float:
    """Penalised objective at standardised ``coef`` (intercept profiled out)."""
    X, y = _check_xy(X, y)
    Z, _, _ = standardize(X)
    r = y - y.mean() - Z @ coef
    return float(r @ r / (2 * y.size) + lam * np.abs(coef).sum())


def _fold_ids(n: int, k: int, seed: int) -> np.ndarray:
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=np.int64)
    ids[perm] = np.arange(n) % k
    return ids


def fit_lasso(
    X,
    y,
    lambda_grid=None,
    cv_folds: int = 10,
    seed: int = 0,
    n_lambda: int = 100,
    lambda_ratio: float = 1e-3,
    tol: float = 1e-7,
    max_sweeps: int = 10000,
) -> LassoModel:
    """Fit along a decreasing penalty grid; pick the penalty with least CV error.

    With a single-value ``lambda_grid`` no cross-validation is run.
    """
    X, y = _check_xy(X, y)
    n, p = X.shape
    Z, center, scale = standardize(X)
    ybar = float(y.mean())
    if np.ptp(y) == 0.0 or p == 0:
        return LassoModel(np.zeros(p), ybar, 0.0, center, scale)

    G, c = _gram(Z, y)
    if lambda_grid is None:
        grid = lambda_path(float(np.max(np.abs(c))), n_lambda, lambda_ratio)
    else:
        grid = np.sort(np.asarray(lambda_grid, dtype=float))[::-1]
        if grid.size == 0 or (grid < 0).any():
            raise ValueError("lambda_grid must be non-empty and non-negative")

    cv_mse = None
    best = 0
    if grid.size > 1:
        if not 2 <= cv_folds <= n:
            raise ValueError(f"cv_folds must lie in [2, n={n}], got {cv_folds}")
        folds = _fold_ids(n, cv_folds, seed)
        sq_err = np.zeros(grid.size)
        for k in range(cv_folds):
            test = folds == k
            train = ~test
            Ztr, ctr, str_ = standardize(X[train])
            Gk, ck = _gram(Ztr, y[train])
            coefs, _ = _cd_path(Gk, ck, grid, np.zeros(p), tol, max_sweeps)
            Zte = (X[test] - ctr) / str_
            pred = y[train].mean() + Zte @ coefs.T
            sq_err += ((y[test][:, None] - pred) ** 2).sum(axis=0)
        cv_mse = sq_err / n
        best = int(np.argmin(cv_mse))

    coefs, _ = _cd_path(G, c, grid[: best + 1], np.zeros(p), tol, max_sweeps)
    return LassoModel(coefs[best].copy(), ybar, float(grid[best]), center, scale, grid, cv_mse)


def predict_lasso(model: LassoModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} columns, got {X.shape}")
    return model.intercept + ((X - model.center) / model.scale) @ model.coef
