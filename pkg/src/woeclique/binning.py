"""Supervised optimal binning by exact dynamic programming.

A feature is first cut into ordered prebins (quantiles for numeric data,
categories sorted by event rate for categorical data). ``optimize`` then merges
adjacent prebins into at most ``max_bins`` groups so that the smoothed
Information Value is maximal, subject to per-bin size and class-count floors.

For categorical features only contiguous groupings of the event-rate order are
searched. This is a heuristic restriction of the unordered grouping problem,
which is exponential.
"""

import warnings
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .encoding import DEFAULT_SMOOTHING, bin_index, quantile_cuts, smoothed_shares
from .exceptions import InfeasibleBinningError, SchemaError, UnseenCategoryWarning
from .validation import (
    as_frame,
    categorical_labels,
    check_binary_target,
    check_columns,
    check_same_length,
    is_categorical,
)


@dataclass(frozen=True)
class Prebin:
    positives: int
    negatives: int
    lower: float | None = None
    upper: float | None = None
    categories: tuple | None = None

    @property
    def count(self):
        return self.positives + self.negatives


@dataclass(frozen=True)
class BinningConstraints:
    max_bins: int = 6
    min_bin_fraction: float = 0.05
    min_class_count: int = 1
    monotonic: bool = False

    def __post_init__(self):
        if self.max_bins < 1:
            raise ValueError("max_bins must be >= 1")
        if not 0.0 <= self.min_bin_fraction <= 1.0:
            raise ValueError("min_bin_fraction must lie in [0, 1]")
        if self.min_class_count < 0:
            raise ValueError("min_class_count must be >= 0")


@dataclass(frozen=True)
class Bin:
    start: int  # first prebin index
    stop: int  # one past the last prebin index
    positives: int
    negatives: int
    woe: float
    lower: float | None = None
    upper: float | None = None
    categories: tuple | None = None


@dataclass(frozen=True)
class BinningSpec:
    feature: str
    kind: str
    bins: tuple
    iv: float
    constraints: BinningConstraints
    smoothing: float
    n_prebins: int

    @property
    def cut_indices(self):
        """Prebin indices where a new bin starts (excluding 0)."""
        return tuple(b.start for b in self.bins[1:])

    @property
    def cuts(self):
        """Numeric upper edges of all bins except the last."""
        return tuple(b.upper for b in self.bins[:-1])

    def to_dict(self):
        bins = []
        for b in self.bins:
            d = {"positives": b.positives, "negatives": b.negatives, "woe": b.woe}
            if self.kind == "numeric":
                d["lower"] = b.lower
                d["upper"] = b.upper
            else:
                d["categories"] = list(b.categories)
            bins.append(d)
        return {
            "feature": self.feature,
            "kind": self.kind,
            "bins": bins,
            "iv": self.iv,
            "constraints": asdict(self.constraints),
            "smoothing": self.smoothing,
            "n_prebins": self.n_prebins,
            "cut_indices": list(self.cut_indices),
        }

    @classmethod
    def from_dict(cls, d):
        bins = []
        starts = [0] + list(d["cut_indices"])
        stops = starts[1:] + [d["n_prebins"]]
        for start, stop, b in zip(starts, stops, d["bins"]):
            cats = tuple(b["categories"]) if "categories" in b else None
            bins.append(
                Bin(start, stop, int(b["positives"]), int(b["negatives"]), float(b["woe"]),
                    b.get("lower"), b.get("upper"), cats)
            )
        return cls(
            feature=d["feature"],
            kind=d["kind"],
            bins=tuple(bins),
            iv=float(d["iv"]),
            constraints=BinningConstraints(**d["constraints"]),
            smoothing=float(d["smoothing"]),
            n_prebins=int(d["n_prebins"]),
        )


def prebin(values, target, kind=None, max_prebins=20):
    """Ordered prebins for one column.

    Numeric: quantile bins ``(lower, upper]`` with open outer ends.
    Categorical: one prebin per category ordered by event rate, ties by label.
    A constant column yields a single prebin.
    """
    check_same_length(values, target)
    y = check_binary_target(target, require_both=False)
    if kind is None:
        kind = "categorical" if is_categorical(pd.Series(values)) else "numeric"
    if kind == "numeric":
        v = np.asarray(values, dtype=float)
        if np.any(np.isnan(v)):
            raise SchemaError("numeric column has missing values")
        cuts = quantile_cuts(v, max_prebins)
        idx = bin_index(v, cuts)
        n = len(cuts) + 1
        pos = np.bincount(idx, weights=y, minlength=n).astype(int)
        cnt = np.bincount(idx, minlength=n)
        edges = [None, *cuts, None]
        return [Prebin(int(pos[b]), int(cnt[b] - pos[b]), edges[b], edges[b + 1]) for b in range(n)]
    if kind != "categorical":
        raise ValueError(f"unknown kind {kind!r}")
    labels = categorical_labels(values)
    grouped = pd.DataFrame({"c": labels, "y": y}).groupby("c")["y"].agg(["sum", "count"])
    rows = [(int(r["sum"]) / int(r["count"]), str(c), int(r["sum"]), int(r["count"] - r["sum"]))
            for c, r in grouped.iterrows()]
    rows.sort(key=lambda r: (r[0], r[1]))
    return [Prebin(p, n, categories=(c,)) for _, c, p, n in rows]


def _segment_terms(pos_cum, neg_cum, total_pos, total_neg, k, smoothing):
    """IV term and WoE for every segment [i, j) of prebins, given k bins in total."""
    P = len(pos_cum) - 1
    i, j = np.triu_indices(P + 1, 1)
    seg_pos = pos_cum[j] - pos_cum[i]
    seg_neg = neg_cum[j] - neg_cum[i]
    ps = (seg_pos + smoothing) / (total_pos + smoothing * k)
    ns = (seg_neg + smoothing) / (total_neg + smoothing * k)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.log(ps / ns)
        term = (ps - ns) * w
    terms = np.full((P + 1, P + 1), np.nan)
    woes = np.full((P + 1, P + 1), np.nan)
    terms[i, j] = term
    woes[i, j] = w
    return terms, woes


def _feasible_segments(pos_cum, neg_cum, constraints, smoothing):
    P = len(pos_cum) - 1
    total = pos_cum[-1] + neg_cum[-1]
    min_count = constraints.min_bin_fraction * total
    ok = np.zeros((P + 1, P + 1), dtype=bool)
    for i in range(P):
        for j in range(i + 1, P + 1):
            sp = pos_cum[j] - pos_cum[i]
            sn = neg_cum[j] - neg_cum[i]
            ok[i, j] = (
                sp + sn >= min_count - 1e-9
                and sp >= constraints.min_class_count
                and sn >= constraints.min_class_count
                # a zero class cell has infinite WoE when unsmoothed
                and (smoothing > 0 or (sp > 0 and sn > 0))
            )
    return ok


def _better(value, cuts, best):
    if best is None:
        return True
    if value > best[0]:
        return True
    return value == best[0] and cuts < best[1]


def _dp_exact_k(P, k, terms, ok):
    """Best (value, cuts) covering all P prebins with exactly k segments."""
    # best[m][j]: prefix [0, j) split into m segments; value summed left to right
    best = [[None] * (P + 1) for _ in range(k + 1)]
    best[0][0] = (0.0, ())
    for m in range(1, k + 1):
        for j in range(m, P + 1):
            cand = None
            for i in range(m - 1, j):
                prev = best[m - 1][i]
                if prev is None or not ok[i, j]:
                    continue
                value = prev[0] + terms[i, j]
                cuts = prev[1] + ((i,) if i > 0 else ())
                if _better(value, cuts, cand):
                    cand = (value, cuts)
            best[m][j] = cand
    return best[k][P]


def _dp_exact_k_monotone(P, k, terms, woes, ok, increasing):
    """As _dp_exact_k with WoE monotone across consecutive bins."""
    # state keyed by the last segment (i, j)
    best = [dict() for _ in range(k + 1)]
    for j in range(1, P + 1):
        if ok[0, j]:
            best[1][(0, j)] = (0.0 + terms[0, j], ())
    for m in range(2, k + 1):
        for (h, i), prev in sorted(best[m - 1].items()):
            for j in range(i + 1, P + 1):
                if not ok[i, j]:
                    continue
                w_prev, w_cur = woes[h, i], woes[i, j]
                if (w_cur < w_prev) if increasing else (w_cur > w_prev):
                    continue
                value = prev[0] + terms[i, j]
                cuts = prev[1] + (i,)
                if _better(value, cuts, best[m].get((i, j))):
                    best[m][(i, j)] = (value, cuts)
    cand = None
    for (i, j), state in sorted(best[k].items()):
        if j == P and _better(state[0], state[1], cand):
            cand = state
    return cand


def optimize(prebins, constraints=None, smoothing=DEFAULT_SMOOTHING, feature="x", kind=None):
    """Merge ordered prebins into the IV-maximizing contiguous partition.

    Solved exactly for every bin count ``k <= max_bins``; the best ``k`` wins
    with ties going to fewer bins, then to the lexicographically earliest cuts.
    """
    constraints = constraints or BinningConstraints()
    prebins = list(prebins)
    if not prebins:
        raise ValueError("no prebins")
    if kind is None:
        kind = "categorical" if prebins[0].categories is not None else "numeric"
    pos = np.array([p.positives for p in prebins], dtype=float)
    neg = np.array([p.negatives for p in prebins], dtype=float)
    total_pos, total_neg = pos.sum(), neg.sum()
    if total_pos + total_neg <= 0:
        raise ValueError("prebins hold no records")
    if total_pos < constraints.min_class_count or total_neg < constraints.min_class_count:
        raise InfeasibleBinningError(
            f"min_class_count={constraints.min_class_count} unattainable: "
            f"{int(total_pos)} positives, {int(total_neg)} negatives in total",
            "min_class_count",
        )
    if smoothing == 0 and (total_pos == 0 or total_neg == 0):
        raise InfeasibleBinningError("a class is absent; WoE undefined without smoothing", "smoothing")

    P = len(prebins)
    pos_cum = np.concatenate([[0.0], np.cumsum(pos)])
    neg_cum = np.concatenate([[0.0], np.cumsum(neg)])
    ok = _feasible_segments(pos_cum, neg_cum, constraints, smoothing)
    monotone = constraints.monotonic and kind == "numeric"

    chosen = None  # (value, cuts, k, woes)
    for k in range(1, min(constraints.max_bins, P) + 1):
        terms, woes = _segment_terms(pos_cum, neg_cum, total_pos, total_neg, k, smoothing)
        if monotone:
            results = [_dp_exact_k_monotone(P, k, terms, woes, ok, inc) for inc in (True, False)]
            result = None
            for r in results:
                if r is not None and _better(r[0], r[1], result):
                    result = r
        else:
            result = _dp_exact_k(P, k, terms, ok)
        if result is not None and (chosen is None or result[0] > chosen[0]):
            chosen = (result[0], result[1], k, woes)
    if chosen is None:
        raise InfeasibleBinningError(
            "no feasible partition under min_bin_fraction/min_class_count", "min_class_count"
        )

    value, cut_idx, k, woes = chosen
    starts = [0, *cut_idx]
    stops = [*cut_idx, P]
    bins = []
    for a, b in zip(starts, stops):
        sp, sn = int(pos_cum[b] - pos_cum[a]), int(neg_cum[b] - neg_cum[a])
        if kind == "numeric":
            bins.append(Bin(a, b, sp, sn, float(woes[a, b]), prebins[a].lower, prebins[b - 1].upper))
        else:
            cats = tuple(c for p in prebins[a:b] for c in p.categories)
            bins.append(Bin(a, b, sp, sn, float(woes[a, b]), categories=cats))
    return BinningSpec(feature, kind, tuple(bins), float(value), constraints, smoothing, P)


def binning_iv(spec):
    """Recompute a spec's IV from its bin counts."""
    pos = [b.positives for b in spec.bins]
    neg = [b.negatives for b in spec.bins]
    ps, ns = smoothed_shares(pos, neg, sum(pos), sum(neg), spec.smoothing)
    return float(np.sum((ps - ns) * np.log(ps / ns)))


def transform(values, spec, return_unseen=False):
    """Map raw values to their bin's WoE.

    Numeric values outside the trained range land in the first or last bin.
    Unseen categories map to WoE 0 with an UnseenCategoryWarning.
    """
    if spec.kind == "numeric":
        v = np.asarray(values, dtype=float)
        if np.any(np.isnan(v)):
            raise SchemaError(f"numeric column {spec.feature!r} has missing values")
        woes = np.array([b.woe for b in spec.bins])
        out = woes[bin_index(v, spec.cuts)]
        return (out, 0) if return_unseen else out
    table = {c: b.woe for b in spec.bins for c in b.categories}
    labels = categorical_labels(values)
    out = np.zeros(len(labels))
    unseen = 0
    for i, label in enumerate(labels):
        w = table.get(label)
        if w is None:
            unseen += 1
        else:
            out[i] = w
    if unseen:
        warnings.warn(
            f"{unseen} value(s) of {spec.feature!r} unseen at fit time; mapped to WoE 0",
            UnseenCategoryWarning,
            stacklevel=2,
        )
    return (out, unseen) if return_unseen else out


def fit_binning(values, target, feature="x", kind=None, constraints=None,
                smoothing=DEFAULT_SMOOTHING, max_prebins=20):
    """prebin + optimize for one column."""
    pre = prebin(values, target, kind=kind, max_prebins=max_prebins)
    kind = kind or ("categorical" if pre[0].categories is not None else "numeric")
    return optimize(pre, constraints, smoothing=smoothing, feature=feature, kind=kind)


class OptimalBinningEncoder(TransformerMixin, BaseEstimator):
    """Per-column optimal binning followed by WoE encoding of the bins.

    Parameters
    ----------
    categorical_features : list of str, optional
        Default: columns with non-numeric dtype.
    max_bins, min_bin_fraction, min_class_count, monotonic
        Bin constraints; ``monotonic`` applies to numeric columns only.
    max_prebins : int, default=20
    smoothing : float, default=0.5
    """

    def __init__(self, categorical_features=None, max_bins=6, min_bin_fraction=0.05,
                 min_class_count=1, monotonic=False, max_prebins=20, smoothing=DEFAULT_SMOOTHING):
        self.categorical_features = categorical_features
        self.max_bins = max_bins
        self.min_bin_fraction = min_bin_fraction
        self.min_class_count = min_class_count
        self.monotonic = monotonic
        self.max_prebins = max_prebins
        self.smoothing = smoothing

    def _constraints(self):
        return BinningConstraints(self.max_bins, self.min_bin_fraction, self.min_class_count, self.monotonic)

    def fit(self, X, y):
        frame = as_frame(X)
        y = check_binary_target(y)
        check_same_length(frame, y)
        if self.categorical_features is None:
            cats = {c for c in frame.columns if is_categorical(frame[c])}
        else:
            cats = set(self.categorical_features)
        constraints = self._constraints()
        self.feature_names_in_ = np.array(frame.columns, dtype=object)
        self.n_features_in_ = frame.shape[1]
        self.specs_ = {
            name: fit_binning(frame[name], y, feature=name,
                              kind="categorical" if name in cats else "numeric",
                              constraints=constraints, smoothing=self.smoothing,
                              max_prebins=self.max_prebins)
            for name in frame.columns
        }
        self.iv_ = pd.Series({n: s.iv for n, s in self.specs_.items()}, name="iv")
        return self

    def transform(self, X):
        check_is_fitted(self, "specs_")
        frame = check_columns(as_frame(X), list(self.feature_names_in_))
        out = {n: transform(frame[n], self.specs_[n]) for n in self.feature_names_in_}
        return pd.DataFrame(out, index=frame.index)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "specs_")
        return np.array(self.feature_names_in_, dtype=object)
