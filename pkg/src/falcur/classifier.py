"""L2-regularised logistic regression fitted by full-batch gradient descent.

The training objective, with labels mapped to +/-1, is

    J(w, b) = sum_i log(1 + exp(-(2 y_i - 1) (w . x_i + b))) + ||w||^2 / (2 C)

Descent runs on J / n so that one learning rate suits any training-set size;
the minimiser is the same.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from sklearn.model_selection import StratifiedKFold

from . import metrics

PROBA_CLIP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    c: float = 1.0
    max_iter: int = 100
    learning_rate: float = 0.1
    grad_tol: float = 1e-6
    fit_intercept: bool = True

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    train_config: TrainConfig = field(default_factory=TrainConfig)
    converged: bool = False
    n_iter: int = 0

    @property
    def d(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class GridSpec:
    c_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    max_iter_grid: tuple[int, ...] = (100, 500, 1000)
    folds: int = 5
    scoring: str = "accuracy"
    seed: int = 0

    def __post_init__(self):
        if not self.c_grid or not self.max_iter_grid:
            raise ValueError("grids must be nonempty")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.scoring not in ("accuracy", "f1", "gmeans"):
            raise ValueError(f"unknown scoring {self.scoring!r}")


def _loss(z, sign, w, c):
    return float(np.sum(np.logaddexp(0.0, -sign * z)) + (w @ w) / (2.0 * c))


def _grad(z, sign, w, X, c):
    r = -sign * expit(-sign * z)
    return X.T @ r + w / c, float(np.sum(r))


def objective(w, b, X, y, c):
    """J(w, b) as in the module docstring (summed, not averaged)."""
    return _loss(X @ w + b, 2.0 * np.asarray(y, dtype=float) - 1.0, w, c)


def gradient(w, b, X, y, c):
    """Analytic gradient of :func:`objective` as ``(dJ/dw, dJ/db)``."""
    return _grad(X @ w + b, 2.0 * np.asarray(y, dtype=float) - 1.0, w, X, c)


def fit(X, y, cfg: TrainConfig = TrainConfig(), init: LogisticModel | None = None) -> LogisticModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one label per row")
    if not np.isfinite(X).all():
        raise ValueError("non-finite values in X")
    if len(np.unique(y)) < 2:
        raise ValueError("training set has a single class")

    n = X.shape[0]
    sign = 2.0 * y - 1.0
    if init is not None:
        w, b = init.weights.astype(float).copy(), float(init.intercept)
    else:
        w, b = np.zeros(X.shape[1]), 0.0
    z = X @ w + b
    f = _loss(z, sign, w, cfg.c) / n
    converged = False
    it = 0
    while it < cfg.max_iter:
        gw, gb = _grad(z, sign, w, X, cfg.c)
        gw, gb = gw / n, (gb / n if cfg.fit_intercept else 0.0)
        if np.sqrt(gw @ gw + gb * gb) < cfg.grad_tol:
            converged = True
            break
        # z is linear in (w, b), so candidate margins need one extra matvec
        dz = X @ gw + gb
        step = cfg.learning_rate
        while True:
            w_new, b_new, z_new = w - step * gw, b - step * gb, z - step * dz
            f_new = _loss(z_new, sign, w_new, cfg.c) / n
            if f_new <= f:
                break
            step *= 0.5
            if step < 1e-30:
                # no descent possible at float precision
                return LogisticModel(w, b, cfg, True, it)
        w, b, z, f = w_new, b_new, z_new, f_new
        it += 1
    return LogisticModel(weights=w, intercept=b, train_config=cfg,
                         converged=converged, n_iter=it)


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    """P(y=1 | x), clipped away from 0 and 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ValueError(f"expected {model.d} columns, got shape {X.shape}")
    return np.clip(expit(X @ model.weights + model.intercept), PROBA_CLIP, 1.0 - PROBA_CLIP)


def predict(model: LogisticModel, X, threshold: float = 0.5) -> np.ndarray:
    return (predict_proba(model, X) >= threshold).astype(np.int64)


def _score(name, y_true, y_pred):
    c = metrics.confusion(y_true, y_pred)
    try:
        return {"accuracy": metrics.accuracy, "f1": metrics.f1, "gmeans": metrics.gmeans}[name](c)
    except metrics.UndefinedMetricError:
        return 0.0


def cv_scores(X, y, grid: GridSpec, base: TrainConfig = TrainConfig()) -> dict:
    """Mean stratified-CV score for every (c, max_iter) cell."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int64)
    counts = np.bincount(y, minlength=2)
    if counts.min() < grid.folds:
        raise ValueError(f"cannot stratify {counts.tolist()} class counts into {grid.folds} folds")
    folds = list(StratifiedKFold(n_splits=grid.folds, shuffle=True,
                                 random_state=grid.seed).split(X, y))
    out = {}
    for c, max_iter in itertools.product(sorted(grid.c_grid), sorted(grid.max_iter_grid)):
        cfg = TrainConfig(c=c, max_iter=max_iter, learning_rate=base.learning_rate,
                          grad_tol=base.grad_tol, fit_intercept=base.fit_intercept)
        scores = []
        for train, held in folds:
            model = fit(X[train], y[train], cfg)
            scores.append(_score(grid.scoring, y[held], predict(model, X[held])))
        out[(c, max_iter)] = float(np.mean(scores))
    return out


def grid_search(X, y, grid: GridSpec = GridSpec(), base: TrainConfig = TrainConfig()) -> TrainConfig:
    """Best (c, max_iter) by mean CV score; ties go to smaller c, then smaller max_iter."""
    scores = cv_scores(X, y, grid, base)
    best = None
    for key in sorted(scores):
        if best is None or scores[key] > scores[best]:
            best = key
    return TrainConfig(c=best[0], max_iter=best[1], learning_rate=base.learning_rate,
                       grad_tol=base.grad_tol, fit_intercept=base.fit_intercept)
