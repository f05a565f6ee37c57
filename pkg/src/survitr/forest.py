"""IPCW-weighted random-forest regression of log event time on covariates.

The auxiliary predictor feeding the prediction-powered score. Censored rows
are excluded; their information enters only through the weights of the
uncensored rows. Backed by scikit-learn's regression forest, with the
weighted per-node squared-error criterion expressed through sample weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import ExtraTreesRegressor, RandomForestRegressor

from .censoring import CensoringModel, ipcw_weights
from .data import Dataset

__all__ = ["ForestHyperparams", "ForestPredictor", "fit_ipcw_forest", "predict"]


@dataclass(frozen=True)
class ForestHyperparams:
    n_trees: int = 100
    max_depth: int | None = 6
    min_leaf: int = 5
    feature_subsample: float = 1.0
    bootstrap: bool = True
    splitter: str = "best"  # "best" = exhaustive splits, "random" = extra-trees

    def __post_init__(self):
        if self.splitter not in ("best", "random"):
            raise ValueError(f"unknown splitter {self.splitter!r}")


@dataclass(frozen=True)
class ForestPredictor:
    """Fitted forest plus the training-response range it cannot leave."""

    model: RandomForestRegressor
    hp: ForestHyperparams
    seed: int
    y_min: float
    y_max: float

    @property
    def trees(self):
        return self.model.estimators_

    @property
    def n_trees(self) -> int:
        return self.hp.n_trees

    def predict(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        out = self.model.predict(np.atleast_2d(x))
        return float(out[0]) if single else out


def fit_ipcw_forest(
    arm: Dataset,
    j: int,
    G: CensoringModel,
    hp: ForestHyperparams = ForestHyperparams(),
    seed: int = 0,
) -> ForestPredictor:
    """Fit a forest to (x, log y) over uncensored rows with weights delta/G."""
    w = ipcw_weights(G, arm, j)
    keep = w > 0
    if not keep.any():
        raise ValueError(f"outcome {j}: zero total IPCW weight, nothing to fit")
    X = arm.x[keep]
    y = np.log(arm.y(j)[keep])
    cls = RandomForestRegressor if hp.splitter == "best" else ExtraTreesRegressor
    model = cls(
        n_estimators=hp.n_trees,
        max_depth=hp.max_depth,
        min_samples_leaf=hp.min_leaf,
        max_features=hp.feature_subsample if hp.feature_subsample < 1.0 else None,
        bootstrap=hp.bootstrap,
        random_state=seed,
    )
    model.fit(X, y, sample_weight=w[keep])
    return ForestPredictor(
        model=model, hp=hp, seed=seed, y_min=float(y.min()), y_max=float(y.max())
    )


def predict(p: ForestPredictor, x) -> np.ndarray | float:
    """Equal-weight average over trees at covariate vector(s) ``x``."""
    return p.predict(x)
