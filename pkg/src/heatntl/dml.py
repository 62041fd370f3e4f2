"""Cross-fitted partially linear DML: residualise outcome and treatment, regress.

Each row's residuals come from nuisance models fitted on the other folds
only. The effect is the no-intercept slope of outcome residuals on treatment
residuals; its standard error is the heteroskedasticity-robust
influence-function variance of that moment.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .climate_features import FeatureMatrix
from .core_types import CityConfig, HeatNtlError, fmt_float
from .nuisance import NuisanceConfig

ESTIMATE_COLUMNS = ("city", "p", "d", "theta", "se", "z", "p_value", "pct_change", "n", "K", "seed")


class DegeneracyError(HeatNtlError, ValueError):
    pass


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    K: int
    seed: int

    def __post_init__(self):
        if self.fold_of.size and (self.fold_of.min() < 0 or self.fold_of.max() >= self.K):
            raise ValueError("fold index out of range")

    def indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == k)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.K)


def make_folds(n: int, K: int, seed: int) -> FoldAssignment:
    """Uniformly random balanced partition of ``range(n)`` into ``K`` folds."""
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    if K > n:
        raise ValueError(f"K={K} exceeds the number of rows n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % K
    return FoldAssignment(fold_of, K, seed)


@dataclass(frozen=True)
class ResidualSet:
    y_tilde: np.ndarray
    d_tilde: np.ndarray
    fold_of: np.ndarray | None = None

    def __post_init__(self):
        if self.y_tilde.shape != self.d_tilde.shape:
            raise ValueError("residual vectors differ in length")


def _fold_seeds(seed: int, K: int) -> list[tuple[int, int]]:
    out = []
    for ss in np.random.SeedSequence(seed).spawn(K):
        a, b = ss.generate_state(2, dtype=np.uint32)
        out.append((int(a), int(b)))
    return out


def cross_fit_residuals(
    fm: FeatureMatrix, folds: FoldAssignment, learners: NuisanceConfig | None = None
) -> ResidualSet:
    """Out-of-fold outcome and treatment residuals.

    Rows are processed in date order internally, so the result does not
    depend on the row order of ``fm`` when ``folds`` is keyed to dates
    (see :func:`folds_for`).
    """
    learners = learners or NuisanceConfig()
    n = fm.n
    if folds.fold_of.size != n:
        raise ValueError(f"fold assignment covers {folds.fold_of.size} rows, matrix has {n}")
    canon = np.argsort(np.array([d.toordinal() for d in fm.dates]), kind="stable")
    X, Y, D = fm.X[canon], fm.Y[canon], fm.D[canon]
    fold_of = folds.fold_of[canon]

    y_hat = np.full(n, np.nan)
    d_hat = np.full(n, np.nan)
    g_learner, m_learner = learners.outcome_learner, learners.treatment_learner
    need = max(g_learner.min_train_rows, m_learner.min_train_rows, 2)
    for k, (g_seed, m_seed) in enumerate(_fold_seeds(folds.seed, folds.K)):
        test = fold_of == k
        train = ~test
        if train.sum() < need:
            raise ValueError(
                f"fold {k}: complement has {int(train.sum())} rows, nuisance fitting needs {need}")
        if not test.any():
            continue
        g = g_learner.fit(X[train], Y[train], seed=g_seed)
        m = m_learner.fit(X[train], D[train], seed=m_seed)
        y_hat[test] = g.predict(X[test])
        d_hat[test] = m.predict(X[test])

    y_tilde = np.empty(n)
    d_tilde = np.empty(n)
    y_tilde[canon] = Y - y_hat
    d_tilde[canon] = D - d_hat
    return ResidualSet(y_tilde, d_tilde, folds.fold_of.copy())


def _check_residuals(res: ResidualSet) -> tuple[np.ndarray, np.ndarray]:
    y, d = np.asarray(res.y_tilde, float), np.asarray(res.d_tilde, float)
    if not (np.isfinite(y).all() and np.isfinite(d).all()):
        raise ValueError("residuals must be finite")
    ssd = float(d @ d)
    if ssd <= 1e-12 * max(d.size, 1):
        raise DegeneracyError("treatment fully explained by covariates")
    return y, d


def estimate_theta(res: ResidualSet) -> float:
    """Ratio sum(D~ Y~) / sum(D~^2)."""
    y, d = _check_residuals(res)
    return float((d @ y) / (d @ d))


def standard_error(res: ResidualSet, theta: float) -> float:
    y, d = _check_residuals(res)
    n = y.size
    if n < 2:
        raise ValueError("need at least two rows")
    j = float(np.mean(d * d))
    psi = d * (y - theta * d)
    var = np.mean(psi * psi) / (j * j)
    return float(math.sqrt(var / n))


def to_percent(theta: float) -> float:
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    return math.expm1(theta) * 100.0


def p_value(theta: float, se: float) -> float:
    """Two-sided normal tail probability of theta / se."""
    if not se > 0:
        raise ValueError(f"standard error must be positive, got {se}")
    return math.erfc(abs(theta / se) / math.sqrt(2.0))


@dataclass(frozen=True)
class DmlEstimate:
    theta: float
    se: float
    z: float
    p_value: float
    pct_change: float
    n: int
    K: int
    p: float
    d: int
    seed: int
    city: str = ""
    repetitions: int = 1

    @classmethod
    def from_theta(cls, theta: float, se: float, *, n: int, K: int, p: float, d: int, seed: int,
                   city: str = "", repetitions: int = 1) -> "DmlEstimate":
        return cls(theta=theta, se=se, z=theta / se, p_value=p_value(theta, se),
                   pct_change=to_percent(theta), n=n, K=K, p=p, d=d, seed=seed, city=city,
                   repetitions=repetitions)

    def ci(self, level: float = 0.95) -> tuple[float, float]:
        from scipy.stats import norm

        q = norm.ppf(0.5 + level / 2)
        return self.theta - q * self.se, self.theta + q * self.se

    def row(self) -> dict:
        return {c: getattr(self, c) for c in ESTIMATE_COLUMNS}

    def to_dict(self) -> dict:
        return asdict(self)


def run_dml(
    fm: FeatureMatrix,
    config: CityConfig,
    learners: NuisanceConfig | None = None,
) -> DmlEstimate:
    """Fold split, cross-fitting and the final moment for one (p, d) design.

    With ``config.repetitions > 1`` the split is redrawn that many times; the
    reported effect is the median and the SE folds in the spread of the
    per-split estimates around it.
    """
    if config.k_folds < 2:
        raise ValueError("k_folds must be >= 2")
    keys = [d.toordinal() for d in fm.dates]
    order = np.argsort(keys, kind="stable")
    thetas, ses = [], []
    rep_seeds = ([config.seed] if config.repetitions == 1 else
                 [int(s.generate_state(1)[0]) for s in
                  np.random.SeedSequence(config.seed).spawn(config.repetitions)])
    for s in rep_seeds:
        folds = folds_for(keys, config.k_folds, s)
        res = cross_fit_residuals(fm, folds, learners)
        # reduce in date order so the sums do not depend on row order
        res = ResidualSet(res.y_tilde[order], res.d_tilde[order], res.fold_of[order])
        th = estimate_theta(res)
        thetas.append(th)
        ses.append(standard_error(res, th))
    thetas_a, ses_a = np.array(thetas), np.array(ses)
    theta = float(np.median(thetas_a))
    se = float(ses_a[0]) if len(thetas) == 1 else float(
        math.sqrt(np.median(ses_a ** 2 + (thetas_a - theta) ** 2)))
    return DmlEstimate.from_theta(theta, se, n=fm.n, K=config.k_folds, p=config.percentile_p,
                                  d=config.duration_d, seed=config.seed, city=config.city_name,
                                  repetitions=config.repetitions)


def folds_for(keys: Sequence[int], K: int, seed: int) -> FoldAssignment:
    """Folds keyed to row identity: the same key always lands in the same fold."""
    keys = np.asarray(keys)
    order = np.argsort(keys, kind="stable")
    base = make_folds(keys.size, K, seed)
    fold_of = np.empty(keys.size, dtype=np.int64)
    fold_of[order] = base.fold_of
    return FoldAssignment(fold_of, K, seed)


def naive_ols(Y, D) -> tuple[float, float]:
    """Slope and classical SE of Y on D with an intercept."""
    Y, D = np.asarray(Y, float), np.asarray(D, float)
    A = np.column_stack([np.ones_like(D), D])
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    sigma2 = resid @ resid / (Y.size - 2)
    cov = sigma2 * np.linalg.inv(A.T @ A)
    return float(coef[1]), float(math.sqrt(cov[1, 1]))


def write_estimates_csv(estimates: Sequence[DmlEstimate], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_COLUMNS)
        for e in estimates:
            w.writerow([e.city, fmt_float(e.p), e.d] + [fmt_float(getattr(e, c)) for c in ESTIMATE_COLUMNS[3:]])


def write_estimates_json(estimates: Sequence[DmlEstimate], path: str | Path) -> None:
    Path(path).write_text(json.dumps([e.row() for e in estimates], indent=2, sort_keys=False) + "\n")
