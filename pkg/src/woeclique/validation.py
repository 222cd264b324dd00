"""Input validation helpers shared by the estimators and functional ops."""

import numpy as np
import pandas as pd

from .exceptions import DegenerateDataError, SchemaError

MISSING_CATEGORY = "missing outcome"


def check_binary_target(y, require_both=True):
    """Return ``y`` as an int8 array of 0/1 labels.

    Raises DegenerateDataError if a class is absent and ``require_both``.
    """
    y = np.asarray(y)
    if y.ndim != 1:
        y = y.ravel()
    if y.size == 0:
        raise DegenerateDataError("empty target")
    if y.dtype == bool:
        y = y.astype(np.int8)
    try:
        yf = y.astype(float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"target must be numeric 0/1: {exc}") from None
    if not np.all((yf == 0) | (yf == 1)):
        raise SchemaError("target must contain only 0 and 1")
    y = yf.astype(np.int8)
    if require_both and (y.min() == y.max()):
        raise DegenerateDataError(f"target has a single class ({int(y[0])})")
    return y


def as_frame(X, feature_names=None):
    """Coerce ``X`` to a DataFrame with string column names."""
    if isinstance(X, pd.DataFrame):
        frame = X
    else:
        arr = np.asarray(X)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise SchemaError(f"expected 2-D input, got shape {arr.shape}")
        names = feature_names or [f"x{i}" for i in range(arr.shape[1])]
        frame = pd.DataFrame(arr, columns=names)
    frame = frame.copy()
    frame.columns = [str(c) for c in frame.columns]
    return frame


def check_same_length(*arrays):
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise SchemaError(f"inputs have inconsistent lengths: {sorted(lengths)}")


def check_columns(frame, expected):
    """Require ``frame`` to contain every column in ``expected``; return them in order."""
    missing = [c for c in expected if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing columns: {missing}")
    return frame[list(expected)]


def is_categorical(series):
    return not (pd.api.types.is_numeric_dtype(series) and not pd.api.types.is_bool_dtype(series))


def categorical_labels(values):
    """Category labels as strings; missing cells become the missing-outcome category."""
    s = pd.Series(values, copy=False)
    out = s.astype(object).where(s.notna(), MISSING_CATEGORY)
    return out.astype(str).to_numpy(dtype=object)


def finite_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if not np.all(np.isfinite(X)):
        raise SchemaError("feature matrix contains non-finite values")
    return X
