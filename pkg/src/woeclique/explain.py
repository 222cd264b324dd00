"""Coefficient and SHAP explanations for a fitted LogisticModel.

SHAP values are computed in log-odds space, where they are exact for a linear
model under feature independence: ``phi_ij = w_j * (x_ij - mean_j)`` with the
means taken over a background set.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from .exceptions import SchemaError
from .model import decision_function
from .validation import finite_matrix


def _matrix(model, x):
    if isinstance(x, pd.DataFrame):
        missing = [f for f in model.feature_names if f not in x.columns]
        if missing:
            raise SchemaError(f"input lacks model features: {missing}")
        x = x[list(model.feature_names)]
    X = finite_matrix(x)
    if X.shape[1] != len(model.feature_names):
        raise SchemaError(f"expected {len(model.feature_names)} columns, got {X.shape[1]}")
    return X


@dataclass(frozen=True)
class CoefficientEntry:
    feature: str
    weight: float
    encoded_std: float
    global_importance: float
    woe_range: tuple


@dataclass(frozen=True)
class CoefficientReport:
    entries: tuple  # descending importance

    def importance(self):
        return {e.feature: e.global_importance for e in self.entries}

    def to_dict(self):
        return {
            "entries": [
                {
                    "feature": e.feature,
                    "weight": e.weight,
                    "encoded_std": e.encoded_std,
                    "global_importance": e.global_importance,
                    "woe_range": list(e.woe_range),
                }
                for e in self.entries
            ]
        }


def coefficient_report(model, x_train, binning_specs=None):
    """Weights with ``|w_j| * std(x_j)`` importance, sorted by importance.

    ``woe_range`` spans the bin WoEs when ``binning_specs`` is given, else the
    observed encoded values.
    """
    X = _matrix(model, x_train)
    stds = X.std(axis=0)
    entries = []
    for j, name in enumerate(model.feature_names):
        w = float(model.weights[j])
        if binning_specs and name in binning_specs:
            woes = [b.woe for b in binning_specs[name].bins]
            rng = (float(min(woes)), float(max(woes)))
        else:
            rng = (float(X[:, j].min()), float(X[:, j].max()))
        entries.append(CoefficientEntry(name, w, float(stds[j]), abs(w) * float(stds[j]), rng))
    entries.sort(key=lambda e: (-e.global_importance, e.feature))
    return CoefficientReport(tuple(entries))


@dataclass(frozen=True)
class ShapMatrix:
    feature_names: tuple
    base_value: float
    values: np.ndarray  # (n_records, n_features), log-odds units
    background_mean: tuple

    def to_csv(self):
        lines = [f"# base_value={self.base_value!r} space=log-odds", ",".join(self.feature_names)]
        for row in self.values:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def shap_linear(model, x, background=None):
    """Exact linear SHAP values; background defaults to ``x`` itself."""
    X = _matrix(model, x)
    B = X if background is None else _matrix(model, background)
    if B.shape[0] == 0:
        raise SchemaError("empty background set")
    mean = B.mean(axis=0)
    w = model.coef
    values = (X - mean) * w
    base = float(mean @ w + model.intercept)
    return ShapMatrix(tuple(model.feature_names), base, values, tuple(float(m) for m in mean))


def linear_score(model, x):
    return decision_function(model, x)


@dataclass(frozen=True)
class ConsistencyReport:
    features: tuple
    mean_abs_shap: dict
    global_importance: dict
    rank_correlation: float
    sign_agreement: float
    per_feature_sign: dict

    def to_dict(self):
        return {
            "space": "log-odds",
            "features": list(self.features),
            "mean_abs_shap": self.mean_abs_shap,
            "global_importance": self.global_importance,
            "rank_correlation": self.rank_correlation,
            "sign_agreement": self.sign_agreement,
            "per_feature_sign_agreement": self.per_feature_sign,
        }


def consistency_check(coef_report, shap, x):
    """Compare SHAP magnitude ranking with coefficient importance.

    ``rank_correlation`` is the Spearman correlation between mean |SHAP| and
    ``|w_j| * std_j``. A feature's sign agrees when its SHAP values correlate
    with its encoded values in the direction of its weight; features with zero
    weight or a constant column agree trivially.
    """
    importance = coef_report.importance()
    names = list(shap.feature_names)
    if set(names) != set(importance):
        raise SchemaError("coefficient report and SHAP matrix cover different features")
    X = finite_matrix(x[names] if isinstance(x, pd.DataFrame) else x)
    mean_abs = {n: float(np.mean(np.abs(shap.values[:, j]))) for j, n in enumerate(names)}
    weights = {e.feature: e.weight for e in coef_report.entries}
    if len(names) < 2:
        rho = 1.0
    else:
        a = [mean_abs[n] for n in names]
        b = [importance[n] for n in names]
        if np.ptp(a) == 0 and np.ptp(b) == 0:
            rho = 1.0
        else:
            rho = float(spearmanr(a, b).statistic)
    signs = {}
    for j, n in enumerate(names):
        col, phi = X[:, j], shap.values[:, j]
        if weights[n] == 0 or np.ptp(col) == 0 or np.ptp(phi) == 0:
            signs[n] = True
            continue
        r = np.corrcoef(phi, col)[0, 1]
        signs[n] = bool(np.sign(r) == np.sign(weights[n]))
    agreement = float(np.mean(list(signs.values()))) if signs else 1.0
    return ConsistencyReport(tuple(names), mean_abs, importance, rho, agreement, signs)
