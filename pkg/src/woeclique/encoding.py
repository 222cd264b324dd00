"""Weight of Evidence encoding and Information Value scoring.

For a category ``i`` with ``P_i`` positives and ``N_i`` negatives, and a
feature with ``k`` categories, the smoothed shares are::

    pos_share_i = (P_i + s) / (TotalPos + s*k)
    neg_share_i = (N_i + s) / (TotalNeg + s*k)

    WoE_i = ln(pos_share_i / neg_share_i)
    IV    = sum_i (pos_share_i - neg_share_i) * WoE_i

With ``s = 0`` these are the textbook definitions. Smoothed shares still sum to
one, so IV stays a nonnegative divergence for any ``s >= 0``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateDataError, InfiniteWoEError, SchemaError, UnseenCategoryWarning
from .validation import (
    as_frame,
    categorical_labels,
    check_binary_target,
    check_columns,
    check_same_length,
    is_categorical,
)

DEFAULT_SMOOTHING = 0.5
DEFAULT_VARIANCE_THRESHOLD = 0.03


@dataclass(frozen=True)
class CategoryStats:
    category: str
    positives: int
    negatives: int


@dataclass(frozen=True)
class WoeEntry:
    category: str
    positives: int
    negatives: int
    woe: float


@dataclass(frozen=True)
class WoeMap:
    """Per-feature lookup from category (or numeric prebin) to WoE.

    ``cuts`` is set for numeric features: bin ``b`` holds values in
    ``(cuts[b-1], cuts[b]]`` with open outer ends.
    """

    feature: str
    entries: tuple
    iv: float
    total_positives: int
    total_negatives: int
    smoothing: float
    cuts: tuple | None = None

    @property
    def kind(self):
        return "categorical" if self.cuts is None else "numeric"

    def lookup(self):
        return {e.category: e.woe for e in self.entries}

    def to_dict(self):
        out = {
            "feature": self.feature,
            "kind": self.kind,
            "totals": {
                "total_positives": self.total_positives,
                "total_negatives": self.total_negatives,
            },
            "entries": [
                {"category": e.category, "positives": e.positives, "negatives": e.negatives, "woe": e.woe}
                for e in self.entries
            ],
            "iv": self.iv,
            "smoothing": self.smoothing,
        }
        if self.cuts is not None:
            out["cuts"] = list(self.cuts)
        return out

    @classmethod
    def from_dict(cls, d):
        entries = tuple(
            WoeEntry(e["category"], int(e["positives"]), int(e["negatives"]), float(e["woe"]))
            for e in d["entries"]
        )
        cuts = tuple(float(c) for c in d["cuts"]) if d.get("cuts") is not None else None
        return cls(
            feature=d["feature"],
            entries=entries,
            iv=float(d["iv"]),
            total_positives=int(d["totals"]["total_positives"]),
            total_negatives=int(d["totals"]["total_negatives"]),
            smoothing=float(d["smoothing"]),
            cuts=cuts,
        )


def category_stats(values, target):
    """Tally positives and negatives per distinct category, sorted by label."""
    check_same_length(values, target)
    if len(values) == 0:
        raise DegenerateDataError("empty input")
    y = check_binary_target(target)
    labels = categorical_labels(values)
    frame = pd.DataFrame({"c": labels, "y": y})
    grouped = frame.groupby("c", sort=True)["y"].agg(["sum", "count"])
    return [
        CategoryStats(str(cat), int(row["sum"]), int(row["count"] - row["sum"]))
        for cat, row in grouped.iterrows()
    ]


def smoothed_shares(positives, negatives, total_positives, total_negatives, smoothing):
    positives = np.asarray(positives, dtype=float)
    negatives = np.asarray(negatives, dtype=float)
    k = positives.size
    pos_share = (positives + smoothing) / (total_positives + smoothing * k)
    neg_share = (negatives + smoothing) / (total_negatives + smoothing * k)
    return pos_share, neg_share


def woe(stats, totals, smoothing=DEFAULT_SMOOTHING):
    """WoE entries for a sequence of CategoryStats.

    ``totals`` is ``(total_positives, total_negatives)``. With zero smoothing a
    category missing one class has infinite WoE and raises InfiniteWoEError.
    """
    total_pos, total_neg = totals
    if total_pos <= 0 or total_neg <= 0:
        raise DegenerateDataError("both class totals must be positive")
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    pos = np.array([s.positives for s in stats], dtype=float)
    neg = np.array([s.negatives for s in stats], dtype=float)
    if smoothing == 0 and (np.any(pos == 0) or np.any(neg == 0)):
        bad = [s.category for s in stats if s.positives == 0 or s.negatives == 0]
        raise InfiniteWoEError(
            f"categories {bad} lack one class; WoE is infinite without smoothing (use smoothing > 0)"
        )
    pos_share, neg_share = smoothed_shares(pos, neg, total_pos, total_neg, smoothing)
    values = np.log(pos_share / neg_share)
    return [WoeEntry(s.category, s.positives, s.negatives, float(w)) for s, w in zip(stats, values)]


def information_value(entries, totals, smoothing=DEFAULT_SMOOTHING):
    """Sum of (pos_share - neg_share) * WoE over the entries."""
    if not entries:
        return 0.0
    pos = [e.positives for e in entries]
    neg = [e.negatives for e in entries]
    pos_share, neg_share = smoothed_shares(pos, neg, totals[0], totals[1], smoothing)
    total = 0.0
    for ps, ns, e in zip(pos_share, neg_share, entries):
        total += (ps - ns) * e.woe
    return float(total)


def woe_map(values, target, feature="x", smoothing=DEFAULT_SMOOTHING):
    """Categorical WoeMap for one column."""
    stats = category_stats(values, target)
    totals = (sum(s.positives for s in stats), sum(s.negatives for s in stats))
    entries = woe(stats, totals, smoothing)
    iv = information_value(entries, totals, smoothing)
    return WoeMap(feature, tuple(entries), iv, totals[0], totals[1], smoothing)


def quantile_cuts(values, n_bins):
    """Upper edges of up to ``n_bins`` quantile bins, as observed data values.

    The last bin is open above, so only ``len(cuts) + 1`` bins exist; each is
    non-empty on ``values``.
    """
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0 or n_bins < 2:
        return ()
    qs = np.unique(np.quantile(v, np.linspace(0.0, 1.0, n_bins + 1)[1:-1]))
    idx = np.searchsorted(qs, v, side="left")
    # re-express each occupied bin by its largest observed value
    maxima = pd.Series(v).groupby(idx).max().sort_index().to_numpy()
    return tuple(float(m) for m in maxima[:-1])


def bin_index(values, cuts):
    return np.searchsorted(np.asarray(cuts, dtype=float), np.asarray(values, dtype=float), side="left")


def _interval_label(b, cuts):
    lo = "-inf" if b == 0 else repr(cuts[b - 1])
    hi = "inf" if b == len(cuts) else repr(cuts[b])
    return f"({lo}, {hi}]"


def numeric_woe_map(values, target, feature="x", prebins=10, smoothing=DEFAULT_SMOOTHING):
    """WoeMap over quantile prebins of a numeric column."""
    v = np.asarray(values, dtype=float)
    check_same_length(v, target)
    if np.any(np.isnan(v)):
        raise SchemaError(f"numeric column {feature!r} has missing values; exclude them first")
    y = check_binary_target(target)
    cuts = quantile_cuts(v, prebins)
    idx = bin_index(v, cuts)
    n_bins = len(cuts) + 1
    pos = np.bincount(idx, weights=y, minlength=n_bins).astype(int)
    cnt = np.bincount(idx, minlength=n_bins)
    stats = [CategoryStats(_interval_label(b, cuts), int(pos[b]), int(cnt[b] - pos[b])) for b in range(n_bins)]
    totals = (int(y.sum()), int(y.size - y.sum()))
    entries = woe(stats, totals, smoothing)
    iv = information_value(entries, totals, smoothing)
    return WoeMap(feature, tuple(entries), iv, totals[0], totals[1], smoothing, cuts=tuple(cuts))


def numeric_iv(values, target, prebins=10, smoothing=DEFAULT_SMOOTHING):
    """IV of a numeric column after quantile prebinning. Constant columns score 0."""
    v = np.asarray(values, dtype=float)
    if np.unique(v[~np.isnan(v)]).size < 2:
        return 0.0
    return numeric_woe_map(v, target, prebins=prebins, smoothing=smoothing).iv


def apply_woe(values, mapping, return_unseen=False):
    """Replace each raw value by its WoE; unseen categories get 0 and a warning."""
    if mapping.cuts is not None:
        v = np.asarray(values, dtype=float)
        if np.any(np.isnan(v)):
            raise SchemaError(f"numeric column {mapping.feature!r} has missing values")
        woes = np.array([e.woe for e in mapping.entries])
        out = woes[bin_index(v, mapping.cuts)]
        return (out, 0) if return_unseen else out
    table = mapping.lookup()
    labels = categorical_labels(values)
    mapped = pd.Series(labels, dtype=object).map(table)
    unseen = int(mapped.isna().sum())
    out = mapped.fillna(0.0).to_numpy(dtype=float)
    if unseen:
        warnings.warn(
            f"{unseen} value(s) of {mapping.feature!r} unseen at fit time; mapped to WoE 0",
            UnseenCategoryWarning,
            stacklevel=2,
        )
    return (out, unseen) if return_unseen else out


@dataclass
class VarianceReport:
    threshold: float
    variances: dict = field(default_factory=dict)
    retained: list = field(default_factory=list)
    dropped: list = field(default_factory=list)

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "variances": self.variances,
            "retained": self.retained,
            "dropped": self.dropped,
        }


def variance_filter(encoded, threshold=DEFAULT_VARIANCE_THRESHOLD):
    """Keep columns whose population variance is >= ``threshold``."""
    frame = as_frame(encoded)
    report = VarianceReport(threshold=threshold)
    for name in frame.columns:
        var = float(np.var(frame[name].to_numpy(dtype=float)))
        report.variances[name] = var
        (report.retained if var >= threshold else report.dropped).append(name)
    return report.retained, report


class WoEEncoder(TransformerMixin, BaseEstimator):
    """Supervised encoder replacing every column by its Weight of Evidence.

    Categorical columns map category -> WoE. Numeric columns are first cut into
    ``numeric_prebins`` quantile bins. Missing categorical cells are treated as
    the ``"missing outcome"`` category.

    Parameters
    ----------
    categorical_features : list of str, optional
        Columns to treat as categorical. Default: non-numeric dtypes.
    smoothing : float, default=0.5
        Additive count smoothing; 0 gives the unsmoothed formulas.
    numeric_prebins : int, default=10
    """

    def __init__(self, categorical_features=None, smoothing=DEFAULT_SMOOTHING, numeric_prebins=10):
        self.categorical_features = categorical_features
        self.smoothing = smoothing
        self.numeric_prebins = numeric_prebins

    def fit(self, X, y):
        frame = as_frame(X)
        y = check_binary_target(y)
        check_same_length(frame, y)
        cats = _resolve_categorical(frame, self.categorical_features)
        self.feature_names_in_ = np.array(frame.columns, dtype=object)
        self.n_features_in_ = frame.shape[1]
        self.categorical_features_ = [c for c in frame.columns if c in cats]
        self.woe_maps_ = {}
        for name in frame.columns:
            if name in cats:
                self.woe_maps_[name] = woe_map(frame[name], y, feature=name, smoothing=self.smoothing)
            else:
                self.woe_maps_[name] = numeric_woe_map(
                    frame[name], y, feature=name, prebins=self.numeric_prebins, smoothing=self.smoothing
                )
        self.iv_ = pd.Series({n: m.iv for n, m in self.woe_maps_.items()}, name="iv")
        return self

    def transform(self, X):
        check_is_fitted(self, "woe_maps_")
        frame = check_columns(as_frame(X), list(self.feature_names_in_))
        out = {name: apply_woe(frame[name], self.woe_maps_[name]) for name in self.feature_names_in_}
        return pd.DataFrame(out, index=frame.index)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "woe_maps_")
        return np.array(self.feature_names_in_, dtype=object)


def _resolve_categorical(frame, categorical_features):
    if categorical_features is None:
        return {c for c in frame.columns if is_categorical(frame[c])}
    unknown = set(categorical_features) - set(frame.columns)
    if unknown:
        raise SchemaError(f"categorical_features not in input: {sorted(unknown)}")
    return set(categorical_features)
