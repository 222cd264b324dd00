"""End-to-end stages: synth, select, train, evaluate, explain, compare, score.

Every stage reads the config, rebuilds the prepared cohort deterministically,
and writes its artifacts under ``<output_dir>/<stage>/``::

    synth/     dataset.csv, manifest.json
    select/    preprocess.json, woe_maps.json, variance.json, iv_scores.json,
               correlation.json, clique_report.json, graph.dot, binning_specs.json
    train/     model.json (scoring bundle), grid_search.json
    evaluate/  <split>/report.json, roc.csv, calibration.csv
    explain/   coefficients.json, shap.csv, consistency.json
    compare/   comparison.json
    score/     scores.csv
"""

import csv
import json
import logging
import math
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import pandas as pd

from . import binning as binning_mod
from .binning import BinningSpec
from .config import stage_seed
from .dataset import (
    SyntheticSpec,
    clip_age,
    dedup_patients,
    generate_synthetic,
    handle_missing,
    load_csv,
    temporal_split,
    write_csv,
)
from .encoding import WoEEncoder, variance_filter
from .evaluation import THRESHOLD_METRICS, auc_roc, confusion, evaluate, threshold_metrics
from .exceptions import ConfigError, DataError, SchemaError
from .explain import coefficient_report, consistency_check, shap_linear
from .model import LogisticModel, grid_search, predict_proba, rfe_baseline
from .selector import CliqueIVSelector
from .validation import MISSING_CATEGORY

log = logging.getLogger(__name__)

BUNDLE_FORMAT = "woeclique-model/1"


# --------------------------------------------------------------------------- io


def _schema(name):
    text = resources.files("woeclique").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj, schema=None):
    data = _clean(obj)
    if schema:
        jsonschema.validate(data, _schema(schema))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"missing artifact {path}; run the producing stage first") from None


def stage_dir(cfg, stage):
    return Path(cfg.output_dir) / stage


# --------------------------------------------------------------------------- data preparation


def synthetic_spec(cfg):
    return SyntheticSpec(
        n_records=cfg.synth_n_records,
        n_informative=cfg.synth_n_informative,
        n_redundant_per_informative=cfg.synth_n_redundant,
        n_noise=cfg.synth_n_noise,
        category_counts=cfg.synth_category_counts,
        effect_strengths=cfg.synth_effect_strengths,
        seed=stage_seed(cfg.seed, "synth"),
        flip_prob=cfg.synth_flip_prob,
        base_log_odds=cfg.synth_base_log_odds,
        n_numeric_noise=cfg.synth_n_numeric_noise,
        repeat_patient_fraction=cfg.synth_repeat_patient_fraction,
        missing_rate=cfg.synth_missing_rate,
    )


def load_cohort(cfg):
    if cfg.input:
        return load_csv(cfg.input, cfg.schema_dict(), cfg.target_column, cfg.optional("patient_column"),
                        cfg.optional("time_column"), cfg.target_kind)
    try:
        ds, _ = generate_synthetic(synthetic_spec(cfg))
    except ValueError as exc:
        raise ConfigError(f"synthetic spec: {exc}") from None
    return ds


def prepare(cfg):
    """Load, clean, split and deduplicate the cohort. Returns (dataset, report)."""
    ds = load_cohort(cfg)
    report = {"n_loaded": ds.n_records}
    ds, missing = handle_missing(ds)
    report["missing"] = missing.to_dict()
    if cfg.age_column:
        ds = clip_age(ds, cfg.age_column)
    ds = temporal_split(ds, cfg.fractions, seed=stage_seed(cfg.seed, "split"))
    report["split_before_dedup"] = _counts(ds)
    if ds.patient_id is not None:
        ds, dedup = dedup_patients(ds, seed=stage_seed(cfg.seed, "dedup"))
        report["dedup"] = dedup.to_dict()
    else:
        report["dedup"] = None
    report["split"] = _counts(ds)
    return ds, report


def _counts(ds):
    c = ds.split_counts()
    return {k: c[k] for k in ("train", "test", "validation")}


def make_selector(cfg, categorical):
    return CliqueIVSelector(
        categorical_features=categorical,
        smoothing=cfg.smoothing,
        numeric_prebins=cfg.numeric_prebins,
        variance_threshold=cfg.variance_threshold,
        correlation_threshold=cfg.correlation_threshold,
        signed_correlation=cfg.correlation_mode == "signed",
        iv_floor=cfg.iv_floor,
        max_bins=cfg.max_bins,
        min_bin_fraction=cfg.min_bin_fraction,
        min_class_count=cfg.min_class_count,
        monotonic=cfg.monotonic,
        max_prebins=cfg.max_prebins,
    )


def _require_split(ds, split):
    sub = ds.subset(split)
    if sub.n_records == 0:
        raise DataError(f"split {split!r} is empty")
    return sub


# --------------------------------------------------------------------------- stages


def cmd_synth(cfg):
    ds, manifest = generate_synthetic(synthetic_spec(cfg))
    out = stage_dir(cfg, "synth")
    out.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out / "dataset.csv", cfg.target_column, cfg.patient_column or "patient_id",
              cfg.time_column or "admit_time")
    manifest = dict(manifest, target_column=cfg.target_column, patient_column=cfg.patient_column,
                    time_column=cfg.time_column)
    write_json(out / "manifest.json", manifest, "manifest")
    log.info("synth: %d records -> %s", ds.n_records, out)
    return ds, manifest


def fit_selection(cfg, ds=None):
    """Run the selector on the training split; returns (selector, train dataset, prep report)."""
    if ds is None:
        ds, prep = prepare(cfg)
    else:
        prep = None
    train = _require_split(ds, "train")
    try:
        selector = make_selector(cfg, train.categorical_names()).fit(train.features, train.target)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return selector, train, prep


def cmd_select(cfg):
    ds, prep = prepare(cfg)
    selector, train, _ = fit_selection(cfg, ds)
    out = stage_dir(cfg, "select")
    write_json(out / "preprocess.json", prep, "preprocess")
    write_json(out / "woe_maps.json", {"woe_maps": [m.to_dict() for m in selector.woe_encoder_.woe_maps_.values()]},
               "woe_maps")
    write_json(out / "variance.json", selector.variance_report_.to_dict(), "variance")
    write_json(out / "iv_scores.json", {"iv_scores": selector.iv_scores_, "method": {
        "categorical": "optimal-binning IV", "numeric": f"quantile-prebin IV ({cfg.numeric_prebins} prebins)"}},
        "iv_scores")
    corr = selector.correlation_
    write_json(out / "correlation.json", {
        "features": list(corr.columns),
        "matrix": corr.to_numpy().tolist(),
        "graph": selector.graph_.to_dict(),
    }, "correlation")
    write_text(out / "graph.dot", selector.graph_.to_dot())
    report = selector.report_.to_dict()
    report["selected_features"] = list(selector.selected_features_)
    write_json(out / "clique_report.json", report, "clique_report")
    write_json(out / "binning_specs.json",
               {"binning_specs": [s.to_dict() for s in selector.binning_.specs_.values()]}, "binning_specs")
    log.info("select: %d cliques, winners %s", len(selector.cliques_), selector.selected_features_)
    return selector


def load_binning_specs(path):
    return {d["feature"]: BinningSpec.from_dict(d) for d in read_json(path)["binning_specs"]}


def encode_with_specs(frame, specs, feature_names):
    missing = [f for f in feature_names if f not in frame.columns]
    if missing:
        raise SchemaError(f"input lacks model features: {missing}")
    return pd.DataFrame({f: binning_mod.transform(frame[f], specs[f]) for f in feature_names}, index=frame.index)


def cmd_train(cfg):
    sel_dir = stage_dir(cfg, "select")
    specs = load_binning_specs(sel_dir / "binning_specs.json")
    selected = read_json(sel_dir / "clique_report.json")["selected_features"]
    ds, _ = prepare(cfg)
    train = _require_split(ds, "train")
    X = encode_with_specs(train.features, specs, selected)
    result, model = grid_search(X, train.target, cfg.grid, cfg.folds, stage_seed(cfg.seed, "grid"),
                                cfg.tol, cfg.max_iter)
    out = stage_dir(cfg, "train")
    write_json(out / "grid_search.json", result.to_dict(), "grid_search")
    bundle = dict(model.to_dict(), format=BUNDLE_FORMAT, seed=cfg.seed,
                  binning_specs=[specs[f].to_dict() for f in selected])
    write_json(out / "model.json", bundle, "model_bundle")
    log.info("train: C=%s, features %s", model.c, list(model.feature_names))
    return model, specs


def load_bundle(path):
    d = read_json(path)
    if d.get("format") != BUNDLE_FORMAT:
        raise ConfigError(f"{path} is not a {BUNDLE_FORMAT} bundle")
    try:
        jsonschema.validate(d, _schema("model_bundle"))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path}: invalid bundle: {exc.message}") from None
    model = LogisticModel.from_dict(d)
    specs = {s["feature"]: BinningSpec.from_dict(s) for s in d["binning_specs"]}
    return model, specs


def _bundle_path(cfg, bundle=None):
    return Path(bundle) if bundle else stage_dir(cfg, "train") / "model.json"


def cmd_evaluate(cfg, split="test", bundle=None):
    if split not in ("test", "validation"):
        raise ConfigError("split must be test or validation")
    model, specs = load_bundle(_bundle_path(cfg, bundle))
    ds, _ = prepare(cfg)
    part = _require_split(ds, split)
    p = predict_proba(model, encode_with_specs(part.features, specs, model.feature_names))
    report = evaluate(part.target, p, split, cfg.threshold, cfg.bootstrap_iterations, cfg.bootstrap_level,
                      stage_seed(cfg.seed, f"bootstrap:{split}"), cfg.calibration_bins)
    out = stage_dir(cfg, "evaluate") / split
    write_json(out / "report.json", report.to_dict(), "evaluation_report")
    write_text(out / "roc.csv", report.roc_csv())
    write_text(out / "calibration.csv", report.calibration_csv())
    log.info("evaluate[%s]: AUC %.4f", split, report.metrics["auc"].point)
    return report


def cmd_explain(cfg, split="test", bundle=None):
    model, specs = load_bundle(_bundle_path(cfg, bundle))
    ds, _ = prepare(cfg)
    train = _require_split(ds, "train")
    part = _require_split(ds, split)
    X_train = encode_with_specs(train.features, specs, model.feature_names)
    X = encode_with_specs(part.features, specs, model.feature_names)
    coef = coefficient_report(model, X_train, specs)
    shap = shap_linear(model, X, background=X_train)
    consistency = consistency_check(coef, shap, X)
    out = stage_dir(cfg, "explain")
    write_json(out / "coefficients.json", dict(coef.to_dict(), intercept=model.intercept), "coefficients")
    write_text(out / "shap.csv", shap.to_csv())
    write_json(out / "consistency.json", dict(consistency.to_dict(), split=split, base_value=shap.base_value),
               "consistency")
    return coef, shap, consistency


def _point_metrics(y, p, threshold):
    c = confusion(y, p, threshold)
    m = threshold_metrics(c)
    out = {name: m.get(name) for name in THRESHOLD_METRICS}
    out["auc"] = auc_roc(y, p)[0]
    out["confusion"] = c.to_dict()
    return out


def cmd_compare(cfg):
    """Clique-IV selection vs RFE vs all variance-filtered features on one split."""
    ds, _ = prepare(cfg)
    selector, train, _ = fit_selection(cfg, ds)
    test = _require_split(ds, "test")
    grid_seed = stage_seed(cfg.seed, "grid")

    encoder = WoEEncoder(train.categorical_names(), cfg.smoothing, cfg.numeric_prebins).fit(train.features,
                                                                                             train.target)
    enc_train = encoder.transform(train.features)
    enc_test = encoder.transform(test.features)
    basic, _ = variance_filter(enc_train, cfg.variance_threshold)

    rows = []
    clique_train = selector.transform(train.features)
    clique_test = selector.transform(test.features)
    result, model = grid_search(clique_train, train.target, cfg.grid, cfg.folds, grid_seed, cfg.tol, cfg.max_iter)
    rows.append(_compare_row("clique-iv", model, result.chosen, clique_test, test.target, cfg.threshold))

    target_count = cfg.rfe_target_count or len(selector.selected_features_)
    target_count = max(1, min(target_count, len(basic)))
    rfe_model, eliminated = rfe_baseline(enc_train[basic], train.target, target_count, cfg.rfe_c,
                                         tol=cfg.tol, max_iter=cfg.max_iter)
    rfe_feats = list(rfe_model.feature_names)
    result, model = grid_search(enc_train[rfe_feats], train.target, cfg.grid, cfg.folds, grid_seed, cfg.tol,
                                cfg.max_iter)
    rows.append(_compare_row("rfe", model, result.chosen, enc_test[rfe_feats], test.target, cfg.threshold))

    result, model = grid_search(enc_train[basic], train.target, cfg.grid, cfg.folds, grid_seed, cfg.tol,
                                cfg.max_iter)
    rows.append(_compare_row("all-features", model, result.chosen, enc_test[basic], test.target, cfg.threshold))

    report = {
        "split": "test",
        "threshold": cfg.threshold,
        "rfe_ranking": "standardized |coefficient| (|w_j| * std_j) at C = rfe_c",
        "rfe_c": cfg.rfe_c,
        "rfe_elimination_order": eliminated,
        "models": rows,
    }
    write_json(stage_dir(cfg, "compare") / "comparison.json", report, "comparison")
    return report


def _compare_row(name, model, c, X_test, y_test, threshold):
    p = predict_proba(model, X_test)
    return {
        "model": name,
        "n_features": len(model.feature_names),
        "features": list(model.feature_names),
        "c": c,
        "metrics": _point_metrics(y_test, p, threshold),
    }


def read_feature_csv(path, feature_kinds):
    """Raw model features from a scoring CSV. Missing categoricals get the missing-outcome label."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    col = {h: j for j, h in enumerate(header)}
    absent = [f for f in feature_kinds if f not in col]
    if absent:
        raise SchemaError(f"scoring input lacks model features: {absent}")
    data = {}
    for name, kind in feature_kinds.items():
        cells = [r[col[name]] for r in rows]
        if kind == "numeric":
            bad = [i for i, c in enumerate(cells, start=1) if c in ("", "NA")]
            if bad:
                raise DataError(f"missing numeric {name!r} in rows {bad[:20]}")
            try:
                data[name] = [float(c) for c in cells]
            except ValueError as exc:
                raise DataError(f"column {name!r}: {exc}") from None
        else:
            data[name] = [MISSING_CATEGORY if c in ("", "NA") else c for c in cells]
    return pd.DataFrame(data), header, rows


def cmd_score(cfg, bundle=None, input_path=None):
    model, specs = load_bundle(_bundle_path(cfg, bundle))
    path = input_path or cfg.input
    if not path:
        raise ConfigError("score needs --input")
    frame, header, rows = read_feature_csv(path, {f: specs[f].kind for f in model.feature_names})
    X = encode_with_specs(frame, specs, model.feature_names)
    p = predict_proba(model, X)
    pid_col = header.index(cfg.patient_column) if cfg.patient_column in header else None
    lines = ["record,patient_id,probability"] if pid_col is not None else ["record,probability"]
    for i, prob in enumerate(p):
        if pid_col is not None:
            lines.append(f"{i},{rows[i][pid_col]},{float(prob)!r}")
        else:
            lines.append(f"{i},{float(prob)!r}")
    return write_text(stage_dir(cfg, "score") / "scores.csv", "\n".join(lines) + "\n"), p


def cmd_run(cfg):
    """select, train, evaluate on test and validation, explain."""
    cmd_select(cfg)
    cmd_train(cfg)
    for split in ("test", "validation"):
        cmd_evaluate(cfg, split)
    cmd_explain(cfg)
