"""Nuisance learners behind a shared fit/predict contract.

The outcome model defaults to the Lasso and the treatment model to the
random forest, but either learner can fill either role.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Protocol

import numpy as np

from .forest import ForestModel, fit_forest, predict_forest
from .lasso import LassoModel, fit_lasso, lambda_max, predict_lasso, soft_threshold


class Learner(Protocol):
    min_train_rows: int

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> "Fitted": ...


class Fitted(Protocol):
    def predict(self, X: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class LassoLearner:
    cv_folds: int = 10
    n_lambda: int = 100
    lambda_ratio: float = 1e-3
    tol: float = 1e-7
    max_sweeps: int = 10000

    @property
    def min_train_rows(self) -> int:
        return self.cv_folds

    def fit(self, X, y, seed: int = 0) -> LassoModel:
        return fit_lasso(X, y, cv_folds=self.cv_folds, seed=seed, n_lambda=self.n_lambda,
                         lambda_ratio=self.lambda_ratio, tol=self.tol, max_sweeps=self.max_sweeps)


@dataclass(frozen=True)
class ForestLearner:
    n_trees: int = 500
    mtry: int | None = None
    min_node: int = 5
    n_jobs: int = 1

    min_train_rows = 1

    def fit(self, X, y, seed: int = 0) -> ForestModel:
        return fit_forest(X, y, B=self.n_trees, mtry=self.mtry, min_node=self.min_node,
                          seed=seed, n_jobs=self.n_jobs)


LEARNERS = {"lasso": LassoLearner, "forest": ForestLearner}


@dataclass(frozen=True)
class NuisanceConfig:
    """Learner choice and hyper-parameters for the outcome and treatment models."""

    outcome: str = "lasso"
    treatment: str = "forest"
    lasso: LassoLearner = LassoLearner()
    forest: ForestLearner = ForestLearner()

    def __post_init__(self):
        for role in (self.outcome, self.treatment):
            if role not in LEARNERS:
                raise ValueError(f"unknown learner {role!r}; choose from {sorted(LEARNERS)}")

    def _learner(self, name: str):
        return self.lasso if name == "lasso" else self.forest

    @property
    def outcome_learner(self):
        return self._learner(self.outcome)

    @property
    def treatment_learner(self):
        return self._learner(self.treatment)

    @classmethod
    def from_dict(cls, raw: dict | None) -> "NuisanceConfig":
        raw = dict(raw or {})
        lasso = LassoLearner(**raw.pop("lasso", {}))
        forest = ForestLearner(**raw.pop("forest", {}))
        return cls(lasso=lasso, forest=forest, **raw)

    def to_dict(self) -> dict:
        return {"outcome": self.outcome, "treatment": self.treatment,
                "lasso": asdict(self.lasso), "forest": asdict(self.forest)}

    def with_jobs(self, n_jobs: int) -> "NuisanceConfig":
        return replace(self, forest=replace(self.forest, n_jobs=n_jobs))


__all__ = [
    "ForestLearner", "ForestModel", "LassoLearner", "LassoModel", "Learner", "NuisanceConfig",
    "fit_forest", "fit_lasso", "lambda_max", "predict_forest", "predict_lasso", "soft_threshold",
]
