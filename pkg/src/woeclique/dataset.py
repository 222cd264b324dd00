"""Cohort loading, admission-data preprocessing, temporal splitting, and synthetic cohorts."""

import csv
import itertools
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.special import expit

from .exceptions import DegenerateDataError, MissingTargetError, ParseError, SchemaError
from .validation import MISSING_CATEGORY

NUMERIC = "numeric"
CATEGORICAL = "categorical"
SPLITS = ("train", "test", "validation", "unassigned")
MISSING_MARKERS = ("", "NA")
LOS_THRESHOLD_DAYS = 7.0
DEFAULT_FRACTIONS = {"train": 0.67, "test": 0.22, "validation": 0.11}


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    values: tuple


def _readonly(arr):
    if arr is None:
        return None
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Typed feature columns plus binary target and optional record metadata.

    Numeric columns hold floats with NaN for missing cells; categorical
    columns hold strings with None for missing cells. Every operation returns
    a new Dataset.
    """

    features: pd.DataFrame
    kinds: dict
    target: np.ndarray
    patient_id: np.ndarray | None = None
    admit_time: np.ndarray | None = None
    split: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.target)
        if len(self.features) != n:
            raise SchemaError("feature columns and target differ in length")
        if set(self.kinds) != set(self.features.columns):
            raise SchemaError("kinds must cover exactly the feature columns")
        for name, kind in self.kinds.items():
            if kind not in (NUMERIC, CATEGORICAL):
                raise SchemaError(f"unknown kind {kind!r} for {name!r}")
            if kind == NUMERIC:
                v = self.features[name].to_numpy(dtype=float)
                if np.any(np.isinf(v)):
                    raise SchemaError(f"numeric column {name!r} has non-finite values")
        y = np.asarray(self.target)
        if n and not np.all((y == 0) | (y == 1)):
            raise SchemaError("target must contain only 0 and 1")
        for label, arr in (("patient_id", self.patient_id), ("admit_time", self.admit_time), ("split", self.split)):
            if arr is not None and len(arr) != n:
                raise SchemaError(f"{label} length differs from record count")
        if self.split is not None and not set(np.unique(self.split)) <= set(SPLITS):
            raise SchemaError("split contains unknown labels")
        frame = self.features.reset_index(drop=True).copy()
        object.__setattr__(self, "features", frame)
        object.__setattr__(self, "kinds", dict(self.kinds))
        object.__setattr__(self, "target", _readonly(np.asarray(self.target, dtype=np.int8)))
        object.__setattr__(self, "patient_id", _readonly(self.patient_id))
        object.__setattr__(self, "admit_time", _readonly(self.admit_time))
        split = self.split if self.split is not None else np.full(n, "unassigned", dtype=object)
        object.__setattr__(self, "split", _readonly(np.asarray(split, dtype=object)))

    @property
    def n_records(self):
        return len(self.target)

    @property
    def feature_names(self):
        return list(self.features.columns)

    def column(self, name):
        if name not in self.kinds:
            raise SchemaError(f"unknown column {name!r}")
        vals = self.features[name].tolist()
        if self.kinds[name] == NUMERIC:
            vals = [None if (v is None or math.isnan(v)) else float(v) for v in vals]
        return Column(name, self.kinds[name], tuple(vals))

    def take(self, mask_or_index):
        idx = np.arange(self.n_records)[mask_or_index]
        return Dataset(
            self.features.iloc[idx].reset_index(drop=True),
            self.kinds,
            self.target[idx],
            None if self.patient_id is None else self.patient_id[idx],
            None if self.admit_time is None else self.admit_time[idx],
            self.split[idx],
        )

    def subset(self, split):
        return self.take(self.split == split)

    def with_split(self, split):
        return replace(self, split=np.asarray(split, dtype=object))

    def categorical_names(self):
        return [c for c in self.features.columns if self.kinds[c] == CATEGORICAL]

    def split_counts(self):
        return {s: int(np.sum(self.split == s)) for s in SPLITS}


# --------------------------------------------------------------------------- loading


def _is_missing(cell):
    return cell in MISSING_MARKERS


def _parse_float(cell, row, column):
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"row {row}, column {column!r}: cannot parse {cell!r} as a number", row, column) from None
    if not math.isfinite(v):
        raise ParseError(f"row {row}, column {column!r}: non-finite value {cell!r}", row, column)
    return v


def _parse_times(cells, column):
    missing = [i for i, c in enumerate(cells) if _is_missing(c)]
    present = [c for c in cells if not _is_missing(c)]
    try:
        numeric = [float(c) for c in present]
        out = np.full(len(cells), np.nan)
        out[[i for i, c in enumerate(cells) if not _is_missing(c)]] = numeric
        return out
    except ValueError:
        pass
    try:
        parsed = pd.to_datetime(pd.Series(cells).where(~pd.Series(cells).isin(MISSING_MARKERS)), errors="raise")
    except (ValueError, TypeError) as exc:
        raise ParseError(f"column {column!r}: unparseable timestamp ({exc})", None, column) from None
    out = (parsed.astype("int64") / 86400e9).to_numpy(dtype=float)  # days since epoch
    out[missing] = np.nan
    return out


def infer_schema(header, rows, exclude=()):
    """Numeric where every non-missing cell parses as a finite float."""
    schema = {}
    for j, name in enumerate(header):
        if name in exclude:
            continue
        kind = NUMERIC
        for r in rows:
            cell = r[j]
            if _is_missing(cell):
                continue
            try:
                if not math.isfinite(float(cell)):
                    kind = CATEGORICAL
                    break
            except ValueError:
                kind = CATEGORICAL
                break
        schema[name] = kind
    return schema


def load_csv(path, schema=None, target_column="target", patient_column=None, time_column=None,
             target_kind="auto"):
    """Read a UTF-8, RFC-4180 CSV into a Dataset.

    ``schema`` maps feature column -> "numeric" | "categorical"; None infers it.
    ``target_kind`` is "binary", "los" (label = length of stay > 7 days) or
    "auto" (binary when every value is 0 or 1).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        rows = [r for r in reader if r]
    for i, r in enumerate(rows, start=1):
        if len(r) != len(header):
            raise ParseError(f"row {i}: expected {len(header)} cells, got {len(r)}", i, None)
    col = {name: j for j, name in enumerate(header)}
    special = [c for c in (target_column, patient_column, time_column) if c is not None]
    for name in special:
        if name not in col:
            raise SchemaError(f"column {name!r} not in header")
    if schema is None:
        schema = infer_schema(header, rows, exclude=special)
    else:
        declared = set(schema)
        present = set(header) - set(special)
        if declared != present:
            raise SchemaError(
                f"header does not match schema: undeclared {sorted(present - declared)}, "
                f"absent {sorted(declared - present)}"
            )

    tcells = [r[col[target_column]] for r in rows]
    missing_rows = [i for i, c in enumerate(tcells, start=1) if _is_missing(c)]
    if missing_rows:
        raise MissingTargetError(missing_rows)
    raw_target = np.array([_parse_float(c, i, target_column) for i, c in enumerate(tcells, start=1)])
    if target_kind == "auto":
        target_kind = "binary" if np.all((raw_target == 0) | (raw_target == 1)) else "los"
    if target_kind == "binary":
        if not np.all((raw_target == 0) | (raw_target == 1)):
            raise SchemaError(f"target column {target_column!r} is not binary")
        target = raw_target.astype(np.int8)
    elif target_kind == "los":
        target = (raw_target > LOS_THRESHOLD_DAYS).astype(np.int8)
    else:
        raise ValueError(f"unknown target_kind {target_kind!r}")

    data = {}
    for name, kind in schema.items():
        j = col[name]
        if kind == NUMERIC:
            data[name] = [np.nan if _is_missing(r[j]) else _parse_float(r[j], i, name)
                          for i, r in enumerate(rows, start=1)]
        elif kind == CATEGORICAL:
            data[name] = pd.Series([None if _is_missing(r[j]) else r[j] for r in rows], dtype=object)
        else:
            raise SchemaError(f"unknown kind {kind!r} for column {name!r}")
    features = pd.DataFrame({n: data[n] for n in schema}, index=range(len(rows)))
    for name, kind in schema.items():
        if kind == CATEGORICAL:
            features[name] = features[name].astype(object)
    pid = None
    if patient_column is not None:
        pid = np.array([None if _is_missing(r[col[patient_column]]) else r[col[patient_column]] for r in rows],
                       dtype=object)
    times = None
    if time_column is not None:
        times = _parse_times([r[col[time_column]] for r in rows], time_column)
    return Dataset(features, dict(schema), target, pid, times)


def write_csv(ds, path, target_column="prolonged_stay", patient_column="patient_id", time_column="admit_time"):
    header = list(ds.feature_names)
    if ds.patient_id is not None:
        header.append(patient_column)
    if ds.admit_time is not None:
        header.append(time_column)
    header.append(target_column)
    cols = []
    for name in ds.feature_names:
        if ds.kinds[name] == NUMERIC:
            cols.append(["" if math.isnan(v) else repr(float(v)) for v in ds.features[name].to_numpy(dtype=float)])
        else:
            cols.append(["" if v is None else str(v) for v in ds.features[name].tolist()])
    if ds.patient_id is not None:
        cols.append(["" if v is None else str(v) for v in ds.patient_id])
    if ds.admit_time is not None:
        cols.append(["" if math.isnan(v) else repr(float(v)) for v in ds.admit_time])
    cols.append([str(int(v)) for v in ds.target])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(zip(*cols))


# --------------------------------------------------------------------------- preprocessing


@dataclass(frozen=True)
class MissingReport:
    excluded_records: int
    imputed_cells: int

    def to_dict(self):
        return asdict(self)


def handle_missing(ds):
    """Drop records missing any numeric value; label missing categorical cells.

    Returns ``(dataset, MissingReport)``.
    """
    numeric = [c for c in ds.feature_names if ds.kinds[c] == NUMERIC]
    keep = np.ones(ds.n_records, dtype=bool)
    if numeric:
        keep = ~ds.features[numeric].isna().any(axis=1).to_numpy()
    out = ds.take(keep)
    y = out.target
    if out.n_records == 0 or y.min() == y.max():
        raise DegenerateDataError("excluding records with missing numeric values left fewer than two classes")
    features = out.features.copy()
    imputed = 0
    for name in out.categorical_names():
        mask = features[name].isna()
        imputed += int(mask.sum())
        features[name] = features[name].astype(object).where(~mask, MISSING_CATEGORY)
    return replace(out, features=features), MissingReport(int((~keep).sum()), imputed)


def clip_age(ds, column):
    """Ages below 1 become 0 and above 90 become 90."""
    if column not in ds.kinds:
        raise SchemaError(f"column {column!r} not found")
    if ds.kinds[column] != NUMERIC:
        raise SchemaError(f"column {column!r} is not numeric")
    features = ds.features.copy()
    v = features[column].to_numpy(dtype=float).copy()
    v[v < 1] = 0.0
    v[v > 90] = 90.0
    features[column] = v
    return replace(ds, features=features)


def split_sizes(n, fractions):
    n_val = int(round(fractions["validation"] * n))
    n_test = int(round(fractions["test"] * n))
    return n - n_val - n_test, n_test, n_val


def temporal_split(ds, fractions=None, seed=0):
    """Latest records by admission time go to validation; the rest are shuffled into train/test.

    Records are ordered by ``(admit_time, record index)``, so tied timestamps at
    the validation boundary resolve by record index: the later records become
    validation.
    """
    fractions = dict(DEFAULT_FRACTIONS if fractions is None else fractions)
    if set(fractions) != {"train", "test", "validation"}:
        raise ValueError("fractions need train, test and validation")
    if any(f < 0 for f in fractions.values()) or abs(sum(fractions.values()) - 1.0) > 1e-9:
        raise ValueError("fractions must be nonnegative and sum to 1")
    if ds.admit_time is None:
        raise SchemaError("admission times are required for a temporal split")
    t = np.asarray(ds.admit_time, dtype=float)
    missing = np.nonzero(np.isnan(t))[0]
    if missing.size:
        raise SchemaError(f"missing admission time in rows: {(missing + 1).tolist()[:20]}")
    n = ds.n_records
    n_train, _, n_val = split_sizes(n, fractions)
    order = np.lexsort((np.arange(n), t))
    split = np.empty(n, dtype=object)
    split[order[n - n_val:]] = "validation"
    early = order[: n - n_val]
    rng = np.random.default_rng(seed)
    shuffled = early[rng.permutation(early.size)]
    split[shuffled[:n_train]] = "train"
    split[shuffled[n_train:]] = "test"
    return ds.with_split(split)


@dataclass(frozen=True)
class DedupReport:
    patients_with_repeats: int
    moved_to_test: int

    def to_dict(self):
        return asdict(self)


def dedup_patients(ds, seed=0):
    """Keep one random training admission per patient; move the others to test.

    Returns ``(dataset, DedupReport)``. Records without a patient id count as
    distinct patients.
    """
    if ds.patient_id is None:
        raise SchemaError("patient ids are required for deduplication")
    split = np.array(ds.split, dtype=object)
    train_idx = np.nonzero(split == "train")[0]
    groups = {}
    for i in train_idx:
        pid = ds.patient_id[i]
        if pid is not None:
            groups.setdefault(str(pid), []).append(int(i))
    rng = np.random.default_rng(seed)
    repeats = moved = 0
    for pid in sorted(groups):
        rows = groups[pid]
        if len(rows) < 2:
            continue
        repeats += 1
        kept = rows[int(rng.integers(len(rows)))]
        for r in rows:
            if r != kept:
                split[r] = "test"
                moved += 1
    return ds.with_split(split), DedupReport(repeats, moved)


# --------------------------------------------------------------------------- synthetic cohorts


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator parameters.

    ``category_counts`` is one cardinality for all categorical features or one
    per feature (informative first, then noise). ``effect_strengths`` gives the
    log-odds spread across each informative feature's categories.
    """

    n_records: int = 10_000
    n_informative: int = 3
    n_redundant_per_informative: int = 2
    n_noise: int = 20
    category_counts: tuple = (4,)
    effect_strengths: tuple = (2.5, 2.0, 1.5)
    seed: int = 0
    flip_prob: float = 0.1
    base_log_odds: float = -0.85
    n_numeric_noise: int = 0
    repeat_patient_fraction: float = 0.1
    missing_rate: float = 0.0
    days_span: float = 1900.0

    def cardinalities(self):
        n_cat = self.n_informative + self.n_noise
        counts = tuple(int(c) for c in self.category_counts)
        if len(counts) == 1:
            counts = counts * n_cat
        if len(counts) != n_cat:
            raise ValueError(f"category_counts needs 1 or {n_cat} entries, got {len(counts)}")
        return counts

    def effects(self):
        eff = tuple(float(e) for e in self.effect_strengths)
        if len(eff) == 1:
            eff = eff * self.n_informative
        if len(eff) != self.n_informative:
            raise ValueError(f"effect_strengths needs 1 or {self.n_informative} entries")
        return eff

    def validate(self):
        if self.n_records < 2:
            raise ValueError("n_records must be >= 2")
        if min(self.n_informative, self.n_redundant_per_informative, self.n_noise, self.n_numeric_noise) < 0:
            raise ValueError("feature counts must be nonnegative")
        if self.n_informative + self.n_noise + self.n_numeric_noise == 0:
            raise ValueError("spec generates no features")
        if any(k < 2 for k in self.cardinalities()):
            raise ValueError("every categorical feature needs at least 2 categories")
        self.effects()
        for name in ("flip_prob", "repeat_patient_fraction", "missing_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def _category_offsets(k, effect):
    return effect * (np.arange(k) / (k - 1) - 0.5)


def _closed_form_ivs(spec, perms):
    """IV of every informative/redundant feature from the generating probabilities."""
    ks = spec.cardinalities()[: spec.n_informative]
    effects = spec.effects()
    if not ks:
        return {}
    if math.prod(ks) > 2_000_000:
        return {}
    grids = np.array(list(itertools.product(*[range(k) for k in ks])), dtype=int)
    logit = spec.base_log_odds + sum(_category_offsets(k, e)[grids[:, j]] for j, (k, e) in enumerate(zip(ks, effects)))
    p1 = expit(logit)
    w = 1.0 / math.prod(ks)
    out = {}
    for j, k in enumerate(ks):
        joint_pos = np.bincount(grids[:, j], weights=w * p1, minlength=k)
        joint_neg = np.bincount(grids[:, j], weights=w * (1 - p1), minlength=k)
        out[f"inf{j}"] = _iv_from_joint(joint_pos, joint_neg)
        for r, perm in enumerate(perms[j], start=1):
            # P(copy = d | orig = c) = (1 - f) [d = perm(c)] + f / k
            trans = np.full((k, k), spec.flip_prob / k)
            trans[np.arange(k), perm] += 1.0 - spec.flip_prob
            out[f"inf{j}_dup{r}"] = _iv_from_joint(joint_pos @ trans, joint_neg @ trans)
    return out


def _iv_from_joint(joint_pos, joint_neg):
    ps = joint_pos / joint_pos.sum()
    ns = joint_neg / joint_neg.sum()
    return float(np.sum((ps - ns) * np.log(ps / ns)))


def generate_synthetic(spec):
    """Generate a cohort with planted informative, redundant and noise features.

    Returns ``(dataset, manifest)``; the manifest records each feature's role
    and the closed-form IV implied by the generating probabilities.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_records
    ks = spec.cardinalities()
    effects = spec.effects()

    informative = [rng.integers(0, ks[j], n) for j in range(spec.n_informative)]
    logit = np.full(n, spec.base_log_odds)
    for j, codes in enumerate(informative):
        logit += _category_offsets(ks[j], effects[j])[codes]
    target = (rng.random(n) < expit(logit)).astype(np.int8)

    columns = {}
    kinds = {}
    roles = {}
    perms = []
    for j, codes in enumerate(informative):
        name = f"inf{j}"
        columns[name] = np.array([f"a{c}" for c in codes], dtype=object)
        kinds[name] = CATEGORICAL
        roles[name] = {"role": "informative", "group": name, "categories": ks[j], "effect": effects[j]}
        perms.append([])
        for r in range(1, spec.n_redundant_per_informative + 1):
            perm = rng.permutation(ks[j])
            copy = perm[codes]
            flip = rng.random(n) < spec.flip_prob
            copy = np.where(flip, rng.integers(0, ks[j], n), copy)
            dup = f"{name}_dup{r}"
            columns[dup] = np.array([f"d{c}" for c in copy], dtype=object)
            kinds[dup] = CATEGORICAL
            roles[dup] = {"role": "redundant", "group": name, "categories": ks[j],
                          "permutation": perm.tolist(), "flip_prob": spec.flip_prob}
            perms[j].append(perm)
    for j in range(spec.n_noise):
        k = ks[spec.n_informative + j]
        name = f"noise{j}"
        vals = np.array([f"n{c}" for c in rng.integers(0, k, n)], dtype=object)
        if spec.missing_rate > 0:
            vals[rng.random(n) < spec.missing_rate] = None
        columns[name] = vals
        kinds[name] = CATEGORICAL
        roles[name] = {"role": "noise", "group": None, "categories": k}
    for j in range(spec.n_numeric_noise):
        name = f"num{j}"
        vals = np.round(rng.uniform(-5.0, 100.0, n), 1)
        if spec.missing_rate > 0:
            vals[rng.random(n) < spec.missing_rate] = np.nan
        columns[name] = vals
        kinds[name] = NUMERIC
        roles[name] = {"role": "noise", "group": None, "categories": None}

    pid = np.arange(n)
    n_repeat = int(round(spec.repeat_patient_fraction * n))
    if n_repeat:
        pos = rng.choice(n, size=n_repeat, replace=False)
        pid[pos] = rng.integers(0, n, n_repeat)
    patient_id = np.array([f"P{p:07d}" for p in pid], dtype=object)
    admit_time = np.round(rng.uniform(0.0, spec.days_span, n), 4)

    closed = _closed_form_ivs(spec, perms)
    for name, info in roles.items():
        if info["role"] == "noise":
            info["closed_form_iv"] = 0.0
        else:
            info["closed_form_iv"] = closed.get(name)
    groups = {f"inf{j}": [f"inf{j}"] + [f"inf{j}_dup{r}" for r in range(1, spec.n_redundant_per_informative + 1)]
              for j in range(spec.n_informative)}
    manifest = {
        "spec": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()},
        "schema": dict(kinds),
        "features": roles,
        "groups": groups,
        "positive_rate": float(target.mean()),
    }
    ds = Dataset(pd.DataFrame(columns), kinds, target, patient_id, admit_time)
    return ds, manifest
