"""L2-penalized logistic regression fitted by IRLS (damped Newton).

Objective, with ``n`` records and an unpenalized intercept ``b``::

    L(w, b) = (1/n) * sum_i [log(1 + exp(z_i)) - y_i * z_i] + ||w||^2 / (2 * C * n)
    z_i = w . x_i + b
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.model_selection import StratifiedKFold
from sklearn.utils.validation import check_is_fitted

from .evaluation import auc_roc
from .exceptions import ConvergenceError, DegenerateDataError, SchemaError
from .validation import as_frame, check_binary_target, check_same_length, finite_matrix

DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)

_P_LOW = np.nextafter(0.0, 1.0)
_P_HIGH = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class LogisticModel:
    feature_names: tuple
    weights: tuple
    intercept: float
    c: float
    training_meta: dict = field(default_factory=dict)

    @property
    def coef(self):
        return np.asarray(self.weights, dtype=float)

    def to_dict(self):
        return {
            "feature_names": list(self.feature_names),
            "weights": list(self.weights),
            "intercept": self.intercept,
            "penalty": "l2",
            "c": self.c,
            "training_meta": dict(self.training_meta),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(d["feature_names"]),
            tuple(float(w) for w in d["weights"]),
            float(d["intercept"]),
            float(d["c"]),
            dict(d.get("training_meta", {})),
        )


def _design(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _penalty_mask(d):
    mask = np.ones(d + 1)
    mask[-1] = 0.0
    return mask


def logistic_loss(beta, X, y, c):
    """Objective value at ``beta = [w..., b]``."""
    Z = _design(np.asarray(X, dtype=float)) @ beta
    n = len(y)
    w = beta[:-1]
    return float(np.mean(np.logaddexp(0.0, Z) - y * Z) + (w @ w) / (2.0 * c * n))


def logistic_gradient(beta, X, y, c):
    """Analytic gradient of ``logistic_loss``."""
    A = _design(np.asarray(X, dtype=float))
    n = len(y)
    p = expit(A @ beta)
    return A.T @ (p - y) / n + _penalty_mask(A.shape[1] - 1) * beta / (c * n)


def _hessian(beta, A, n, c):
    p = expit(A @ beta)
    W = p * (1.0 - p)
    H = (A * W[:, None]).T @ A / n
    H[np.diag_indices_from(H)] += _penalty_mask(A.shape[1] - 1) / (c * n)
    return H


def fit_logistic(x, y, c=1.0, tol=1e-8, max_iter=1000, feature_names=None, seed=None):
    """Fit weights and intercept; return a LogisticModel.

    Raises ConvergenceError if the gradient norm is still >= ``tol`` after
    ``max_iter`` Newton iterations.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if isinstance(x, pd.DataFrame):
        feature_names = list(x.columns) if feature_names is None else feature_names
    X = finite_matrix(x)
    y = check_binary_target(y).astype(float)
    check_same_length(X, y)
    n, d = X.shape
    names = tuple(str(f) for f in (feature_names or [f"x{i}" for i in range(d)]))
    if len(names) != d:
        raise SchemaError("feature_names length does not match columns")

    A = _design(X)
    beta = np.zeros(d + 1)
    loss = logistic_loss(beta, X, y, c)
    grad = logistic_gradient(beta, X, y, c)
    gnorm = float(np.linalg.norm(grad))
    it = 0
    while gnorm >= tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"no convergence after {max_iter} iterations (gradient norm {gnorm:.3e})",
                last_iterate=beta.copy(), gradient_norm=gnorm,
            )
        it += 1
        H = _hessian(beta, A, n, c)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        for _ in range(60):
            cand = beta - t * step
            cand_loss = logistic_loss(cand, X, y, c)
            if cand_loss <= loss:
                break
            # near the optimum the loss change drops below rounding; fall back to the gradient
            cand_grad = logistic_gradient(cand, X, y, c)
            if cand_loss - loss <= 1e-13 * max(1.0, abs(loss)) and np.linalg.norm(cand_grad) < gnorm:
                break
            t *= 0.5
        else:
            raise ConvergenceError(
                "step halving failed to decrease the objective",
                last_iterate=beta.copy(), gradient_norm=gnorm,
            )
        beta = cand
        if not np.all(np.isfinite(beta)):
            raise ConvergenceError("non-finite coefficients", last_iterate=beta.copy(), gradient_norm=gnorm)
        loss = cand_loss
        grad = logistic_gradient(beta, X, y, c)
        gnorm = float(np.linalg.norm(grad))

    meta = {"seed": seed, "convergence_tol": tol, "iterations_used": it, "gradient_norm": gnorm}
    return LogisticModel(names, tuple(float(w) for w in beta[:-1]), float(beta[-1]), float(c), meta)


def decision_function(model, x):
    if isinstance(x, pd.DataFrame):
        missing = [f for f in model.feature_names if f not in x.columns]
        if missing:
            raise SchemaError(f"input lacks model features: {missing}")
        x = x[list(model.feature_names)]
    X = finite_matrix(x)
    if X.shape[1] != len(model.feature_names):
        raise SchemaError(f"expected {len(model.feature_names)} columns, got {X.shape[1]}")
    return X @ model.coef + model.intercept


def predict_proba(model, x):
    """P(y = 1) per record, kept strictly inside (0, 1)."""
    return np.clip(expit(decision_function(model, x)), _P_LOW, _P_HIGH)


@dataclass
class GridSearchResult:
    grid: list
    scores: list  # mean CV AUC per candidate
    fold_scores: list
    chosen: float

    def to_dict(self):
        return {
            "grid": list(self.grid),
            "scores": list(self.scores),
            "fold_scores": [list(f) for f in self.fold_scores],
            "chosen": self.chosen,
            "metric": "mean stratified-CV AUC",
        }


def grid_search(x, y, grid=DEFAULT_GRID, folds=5, seed=0, tol=1e-8, max_iter=1000):
    """Stratified k-fold CV over C; returns (GridSearchResult, refit LogisticModel).

    Ties in mean AUC go to the smallest C.
    """
    grid = sorted(float(g) for g in grid)
    if not grid:
        raise ValueError("empty grid")
    feature_names = list(x.columns) if isinstance(x, pd.DataFrame) else None
    X = finite_matrix(x)
    y = check_binary_target(y)
    counts = np.bincount(y, minlength=2)
    if counts.min() < folds:
        raise DegenerateDataError(
            f"cannot stratify {folds} folds: class counts {counts.tolist()} leave a fold with one class"
        )
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    splits = list(splitter.split(X, y))
    fold_scores = []
    for c in grid:
        per_fold = []
        for train_idx, val_idx in splits:
            m = fit_logistic(X[train_idx], y[train_idx], c=c, tol=tol, max_iter=max_iter)
            per_fold.append(auc_roc(y[val_idx], predict_proba(m, X[val_idx]))[0])
        fold_scores.append(per_fold)
    scores = [float(np.mean(f)) for f in fold_scores]
    best = max(scores)
    chosen = next(c for c, s in zip(grid, scores) if s == best)
    model = fit_logistic(X, y, c=chosen, tol=tol, max_iter=max_iter, feature_names=feature_names, seed=seed)
    return GridSearchResult(grid, scores, fold_scores, chosen), model


def rfe_baseline(x_all, y, target_count=9, c=1.0, feature_names=None, tol=1e-8, max_iter=1000, seed=None):
    """Recursive feature elimination by standardized |coefficient|.

    Drops the feature with the smallest ``|w_j| * std(x_j)`` until
    ``target_count`` remain. Returns (final model, elimination order).
    """
    if isinstance(x_all, pd.DataFrame):
        feature_names = list(x_all.columns) if feature_names is None else feature_names
    X = finite_matrix(x_all)
    names = list(feature_names or [f"x{i}" for i in range(X.shape[1])])
    if X.shape[1] < target_count:
        raise ValueError(f"need at least {target_count} features, got {X.shape[1]}")
    if target_count < 1:
        raise ValueError("target_count must be >= 1")
    keep = list(range(X.shape[1]))
    stds = X.std(axis=0)
    eliminated = []
    model = fit_logistic(X[:, keep], y, c=c, tol=tol, max_iter=max_iter,
                         feature_names=[names[k] for k in keep], seed=seed)
    while len(keep) > target_count:
        score = np.abs(model.coef) * stds[keep]
        # ties: drop the largest name so results do not depend on column order
        tied = [i for i in range(len(keep)) if score[i] == score.min()]
        drop_pos = max(tied, key=lambda i: names[keep[i]])
        eliminated.append(names[keep[drop_pos]])
        del keep[drop_pos]
        model = fit_logistic(X[:, keep], y, c=c, tol=tol, max_iter=max_iter,
                             feature_names=[names[k] for k in keep], seed=seed)
    return model, eliminated


class L2LogisticRegression(ClassifierMixin, BaseEstimator):
    """Binary logistic regression with an L2 penalty, fit by IRLS.

    Parameters
    ----------
    C : float, default=1.0
        Inverse regularization strength.
    tol : float, default=1e-8
        Gradient-norm stopping threshold.
    max_iter : int, default=1000
    """

    def __init__(self, C=1.0, tol=1e-8, max_iter=1000):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        frame = as_frame(X)
        self.model_ = fit_logistic(frame, y, c=self.C, tol=self.tol, max_iter=self.max_iter)
        self.feature_names_in_ = np.array(self.model_.feature_names, dtype=object)
        self.n_features_in_ = len(self.model_.feature_names)
        self.coef_ = self.model_.coef.reshape(1, -1)
        self.intercept_ = np.array([self.model_.intercept])
        self.n_iter_ = np.array([self.model_.training_meta["iterations_used"]])
        self.classes_ = np.array([0, 1])
        return self

    def _frame(self, X):
        if isinstance(X, pd.DataFrame):
            return X
        return as_frame(X, list(self.feature_names_in_))

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return decision_function(self.model_, self._frame(X))

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        p = predict_proba(self.model_, self._frame(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)
