"""Threshold metrics, ROC/AUC, calibration, and percentile-bootstrap CIs."""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .exceptions import DegenerateDataError, SchemaError, UnreliableCIError
from .validation import check_binary_target, check_same_length

# Row labels of the published performance table, in its order.
TABLE_ROWS = {
    "accuracy": "Accuracy",
    "precision": "Positive Predictive value or Precision",
    "sensitivity": "Sensitivity or Recall",
    "f1": "F1 Score",
    "tpr": "True Positive Rate",
    "specificity": "Specificity or True Negative Rate",
    "auc": "AUC ROC",
}

THRESHOLD_METRICS = ("accuracy", "precision", "sensitivity", "specificity", "f1")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self):
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class ThresholdMetrics:
    """Metric values; an undefined ratio is None with its reason in ``undefined``."""

    accuracy: float | None
    precision: float | None
    sensitivity: float | None
    specificity: float | None
    f1: float | None
    undefined: dict = field(default_factory=dict)

    def get(self, name):
        if name == "tpr":
            name = "sensitivity"
        return getattr(self, name)


@dataclass(frozen=True)
class MetricWithCI:
    name: str
    point: float
    ci_low: float
    ci_high: float
    level: float = 0.95
    iterations: int = 0
    skipped: int = 0

    def to_dict(self):
        return {
            "point": self.point,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
            "iterations": self.iterations,
            "skipped_replicates": self.skipped,
        }


@dataclass(frozen=True)
class CalibrationCurve:
    bins: tuple  # of dicts: lower, upper, mean_predicted, observed_rate, count
    slope: float | None
    intercept: float | None
    undefined_reason: str | None = None

    def to_dict(self):
        return {
            "bins": [dict(b) for b in self.bins],
            "slope": self.slope,
            "intercept": self.intercept,
            "undefined_reason": self.undefined_reason,
        }


def _inputs(y_true, p_pred, require_both=False):
    y = check_binary_target(y_true, require_both=require_both)
    p = np.asarray(p_pred, dtype=float).ravel()
    check_same_length(y, p)
    if y.size == 0:
        raise SchemaError("empty input")
    return y, p


def confusion(y_true, p_pred, threshold=0.5):
    """Counts with a positive prediction iff ``p >= threshold``."""
    if len(y_true) == 0:
        raise SchemaError("empty input")
    y, p = _inputs(y_true, p_pred)
    pred = p >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def threshold_metrics(c):
    undefined = {}

    def ratio(name, num, den, reason):
        if den == 0:
            undefined[name] = reason
            return None
        return num / den

    accuracy = ratio("accuracy", c.tp + c.tn, c.n, "no records")
    precision = ratio("precision", c.tp, c.tp + c.fp, "no positive predictions (tp + fp = 0)")
    sensitivity = ratio("sensitivity", c.tp, c.tp + c.fn, "no positive records (tp + fn = 0)")
    specificity = ratio("specificity", c.tn, c.tn + c.fp, "no negative records (tn + fp = 0)")
    if precision is None or sensitivity is None:
        f1 = None
        undefined["f1"] = "precision or sensitivity undefined"
    elif precision + sensitivity == 0:
        f1 = None
        undefined["f1"] = "precision + sensitivity = 0"
    else:
        f1 = 2 * precision * sensitivity / (precision + sensitivity)
    return ThresholdMetrics(accuracy, precision, sensitivity, specificity, f1, undefined)


def auc_roc(y_true, p_pred):
    """AUC by the Mann-Whitney rank statistic (ties count half) and ROC points.

    Returns ``(auc, points)`` where ``points`` is an array of
    ``(threshold, fpr, tpr)`` rows, starting at ``(inf, 0, 0)``.
    """
    y, p = _inputs(y_true, p_pred, require_both=True)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    ranks = rankdata(p)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    auc = float(u / (n_pos * n_neg))

    order = np.argsort(-p, kind="mergesort")
    ps, ys = p[order], y[order]
    tp = np.cumsum(ys)
    fp = np.cumsum(1 - ys)
    last = np.r_[np.nonzero(np.diff(ps))[0], ps.size - 1]
    points = np.column_stack([
        np.r_[np.inf, ps[last]],
        np.r_[0.0, fp[last] / n_neg],
        np.r_[0.0, tp[last] / n_pos],
    ])
    return auc, points


def calibration(y_true, p_pred, bins=10):
    """Equal-width reliability curve with a count-weighted least-squares line."""
    y, p = _inputs(y_true, p_pred, require_both=True)
    if np.any((p < 0) | (p > 1)):
        raise SchemaError("predictions must lie in [0, 1]")
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.searchsorted(edges, p, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    sum_p = np.bincount(idx, weights=p, minlength=bins)
    sum_y = np.bincount(idx, weights=y, minlength=bins)
    rows = []
    for b in np.nonzero(counts)[0]:
        rows.append({
            "lower": float(edges[b]),
            "upper": float(edges[b + 1]),
            "mean_predicted": float(sum_p[b] / counts[b]),
            "observed_rate": float(sum_y[b] / counts[b]),
            "count": int(counts[b]),
        })
    if len(rows) < 2:
        return CalibrationCurve(tuple(rows), None, None, "fewer than 2 non-empty bins")
    slope, intercept = _weighted_line(
        [r["mean_predicted"] for r in rows], [r["observed_rate"] for r in rows], [r["count"] for r in rows]
    )
    if slope is None:
        return CalibrationCurve(tuple(rows), None, None, "all non-empty bins share one mean prediction")
    return CalibrationCurve(tuple(rows), slope, intercept)


def _weighted_line(x, y, w):
    x, y, w = (np.asarray(a, dtype=float) for a in (x, y, w))
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    if sxx == 0:
        return None, None
    slope = np.sum(w * (x - xm) * (y - ym)) / sxx
    return float(slope), float(ym - slope * xm)


def metric_value(name, y, p, threshold=0.5, calibration_bins=10):
    """One named metric on one sample, or None when undefined there."""
    if name in THRESHOLD_METRICS or name == "tpr":
        return threshold_metrics(confusion(y, p, threshold)).get(name)
    if name == "auc":
        if y.min() == y.max():
            return None
        return auc_roc(y, p)[0]
    if name in ("calibration_slope", "calibration_intercept"):
        if y.min() == y.max():
            return None
        curve = calibration(y, p, calibration_bins)
        return curve.slope if name == "calibration_slope" else curve.intercept
    raise ValueError(f"unknown metric {name!r}")


def bootstrap_ci(y_true, p_pred, metric, iterations=1000, level=0.95, seed=0, threshold=0.5,
                 calibration_bins=10):
    """Percentile bootstrap CI for a named metric.

    Replicates where the metric is undefined (e.g. a single class) are skipped;
    more than half skipped raises UnreliableCIError. The interval is widened if
    needed to contain the point estimate.
    """
    if iterations < 100:
        raise ValueError("iterations must be >= 100")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    y, p = _inputs(y_true, p_pred)
    point = metric_value(metric, y, p, threshold, calibration_bins)
    if point is None:
        raise DegenerateDataError(f"{metric} is undefined on the full sample")
    n = y.size
    rng = np.random.default_rng(seed)
    values = []
    skipped = 0
    chunk = 100
    for start in range(0, iterations, chunk):
        size = min(chunk, iterations - start)
        idx = rng.integers(0, n, size=(size, n))
        if metric in THRESHOLD_METRICS or metric == "tpr":
            batch = _threshold_batch(metric, y[idx], p[idx] >= threshold)
        else:
            batch = [metric_value(metric, y[row], p[row], threshold, calibration_bins) for row in idx]
        for v in batch:
            if v is None:
                skipped += 1
            else:
                values.append(v)
    if skipped > iterations / 2:
        raise UnreliableCIError(f"{skipped} of {iterations} bootstrap replicates were degenerate for {metric}")
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(np.asarray(values), [alpha, 1.0 - alpha])
    return MetricWithCI(metric, float(point), float(min(low, point)), float(max(high, point)),
                        level, iterations, skipped)


def _threshold_batch(metric, yb, predb):
    pos = yb == 1
    tp = np.sum(predb & pos, axis=1)
    fp = np.sum(predb & ~pos, axis=1)
    tn = np.sum(~predb & ~pos, axis=1)
    fn = np.sum(~predb & pos, axis=1)
    return [
        threshold_metrics(ConfusionCounts(int(a), int(b), int(c), int(d))).get(metric)
        for a, b, c, d in zip(tp, fp, tn, fn)
    ]


@dataclass
class EvaluationReport:
    split: str
    n_records: int
    threshold: float
    confusion: ConfusionCounts
    metrics: dict  # metric key -> MetricWithCI
    roc_points: np.ndarray
    calibration: CalibrationCurve
    calibration_ci: dict = field(default_factory=dict)

    def to_dict(self):
        table = {TABLE_ROWS[k]: self.metrics[k].to_dict() for k in TABLE_ROWS if k in self.metrics}
        return {
            "split": self.split,
            "n_records": self.n_records,
            "threshold": self.threshold,
            "confusion": self.confusion.to_dict(),
            "metrics": table,
            "calibration": {
                "slope": self.calibration.slope,
                "intercept": self.calibration.intercept,
                "undefined_reason": self.calibration.undefined_reason,
                "ci": {k: v.to_dict() for k, v in self.calibration_ci.items()},
            },
        }

    def roc_csv(self):
        lines = ["threshold,fpr,tpr"]
        for t, f, tp in self.roc_points:
            lines.append(f"{float(t)!r},{float(f)!r},{float(tp)!r}")
        return "\n".join(lines) + "\n"

    def calibration_csv(self):
        lines = ["lower,upper,mean_predicted,observed_rate,count"]
        for b in self.calibration.bins:
            vals = [b["lower"], b["upper"], b["mean_predicted"], b["observed_rate"]]
            lines.append(",".join(repr(float(v)) for v in vals) + f",{int(b['count'])}")
        return "\n".join(lines) + "\n"


def evaluate(y_true, p_pred, split="test", threshold=0.5, iterations=1000, level=0.95, seed=0,
             calibration_bins=10):
    """Full report: confusion, table metrics with CIs, ROC and calibration curves."""
    y, p = _inputs(y_true, p_pred, require_both=True)
    metrics = {}
    for key in TABLE_ROWS:
        if key == "tpr":
            continue
        metrics[key] = bootstrap_ci(y, p, key, iterations, level, seed, threshold, calibration_bins)
    s = metrics["sensitivity"]
    metrics["tpr"] = MetricWithCI("tpr", s.point, s.ci_low, s.ci_high, s.level, s.iterations, s.skipped)
    curve = calibration(y, p, calibration_bins)
    cal_ci = {}
    if curve.slope is not None:
        for key in ("calibration_slope", "calibration_intercept"):
            try:
                cal_ci[key] = bootstrap_ci(y, p, key, iterations, level, seed, threshold, calibration_bins)
            except UnreliableCIError:
                pass
    _, points = auc_roc(y, p)
    return EvaluationReport(split, int(y.size), threshold, confusion(y, p, threshold), metrics, points, curve, cal_ci)
