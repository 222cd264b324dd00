import numpy as np
import pandas as pd
import pytest

from woeclique.dataset import (
    CATEGORICAL,
    NUMERIC,
    Dataset,
    SyntheticSpec,
    clip_age,
    dedup_patients,
    generate_synthetic,
    handle_missing,
    load_csv,
    split_sizes,
    temporal_split,
    write_csv,
)
from woeclique.encoding import woe_map
from woeclique.exceptions import MissingTargetError, ParseError, SchemaError


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def _ds(n, times=None, pids=None, **cols):
    kinds = {k: (NUMERIC if np.asarray(v).dtype.kind == "f" else CATEGORICAL) for k, v in cols.items()}
    y = np.arange(n) % 2
    frame = pd.DataFrame({k: (v if kinds[k] == NUMERIC else pd.Series(v, dtype=object)) for k, v in cols.items()})
    return Dataset(frame, kinds, y, pids, times)


def test_los_target_boundary(tmp_path):
    p = _write(tmp_path, "age,los\n30,3\n40,7\n50,10\n")
    ds = load_csv(p, target_column="los")
    assert ds.target.tolist() == [0, 0, 1]


def test_binary_target_passes_through(tmp_path):
    p = _write(tmp_path, "age,target\n30,1\n40,0\n50,1\n")
    assert load_csv(p).target.tolist() == [1, 0, 1]


def test_parse_error_names_coordinate(tmp_path):
    p = _write(tmp_path, "age,target\n30,1\nabc,0\n")
    with pytest.raises(ParseError) as err:
        load_csv(p, schema={"age": "numeric"})
    assert err.value.row == 2
    assert err.value.column == "age"


def test_missing_target_lists_rows(tmp_path):
    p = _write(tmp_path, "age,target\n30,1\n40,\n50,NA\n")
    with pytest.raises(MissingTargetError) as err:
        load_csv(p)
    assert err.value.rows == [2, 3]


def test_schema_mismatch(tmp_path):
    p = _write(tmp_path, "age,target\n30,1\n")
    with pytest.raises(SchemaError):
        load_csv(p, schema={"height": "numeric"})


def test_quoted_cells_and_inference(tmp_path):
    p = _write(tmp_path, 'insurer,age,target\n"Acme, Inc",30,1\nNA,41.5,0\n')
    ds = load_csv(p)
    assert ds.kinds == {"insurer": CATEGORICAL, "age": NUMERIC}
    assert ds.features["insurer"].tolist() == ["Acme, Inc", None]


def test_datetime_admission_times(tmp_path):
    p = _write(tmp_path, "x,t,target\n1,2020-01-01,0\n2,2020-01-03,1\n")
    ds = load_csv(p, time_column="t")
    assert ds.admit_time[1] - ds.admit_time[0] == 2.0


def test_csv_roundtrip(tmp_path):
    ds, _ = generate_synthetic(SyntheticSpec(n_records=50, n_noise=2, n_numeric_noise=1, seed=3))
    path = tmp_path / "out.csv"
    write_csv(ds, path)
    back = load_csv(path, schema=ds.kinds, target_column="prolonged_stay", patient_column="patient_id",
                    time_column="admit_time")
    pd.testing.assert_frame_equal(back.features, ds.features)
    assert np.array_equal(back.target, ds.target)
    assert np.array_equal(back.admit_time, ds.admit_time)


def test_handle_missing_no_missing_is_identity():
    ds = _ds(4, age=np.array([1.0, 2.0, 3.0, 4.0]), ins=["a", "b", "a", "b"])
    out, report = handle_missing(ds)
    assert report.to_dict() == {"excluded_records": 0, "imputed_cells": 0}
    pd.testing.assert_frame_equal(out.features, ds.features)


def test_handle_missing_drops_numeric_and_labels_categorical():
    age = np.arange(10.0)
    age[[2, 5]] = np.nan
    out, report = handle_missing(_ds(10, age=age))
    assert out.n_records == 8
    assert report.excluded_records == 2
    ins = ["a"] * 10
    for i in (1, 4, 7):
        ins[i] = None
    out, report = handle_missing(_ds(10, ins=ins))
    assert out.n_records == 10
    assert report.imputed_cells == 3
    assert out.features["ins"].tolist().count("missing outcome") == 3


def test_handle_missing_idempotent():
    age = np.arange(10.0)
    age[3] = np.nan
    ins = ["a", None] * 5
    once, _ = handle_missing(_ds(10, age=age, ins=ins))
    twice, report = handle_missing(once)
    pd.testing.assert_frame_equal(once.features, twice.features)
    assert report.to_dict() == {"excluded_records": 0, "imputed_cells": 0}


def test_clip_age():
    assert clip_age(_ds(3, age=np.array([0.5, 45, 95.0])), "age").features["age"].tolist() == [0, 45, 90]
    assert clip_age(_ds(2, age=np.array([1.0, 90.0])), "age").features["age"].tolist() == [1, 90]
    empty = Dataset(pd.DataFrame({"age": np.array([], dtype=float)}), {"age": NUMERIC}, np.array([], dtype=int))
    assert clip_age(empty, "age").features["age"].tolist() == []


def test_temporal_split_sizes_and_chronology():
    n = 100
    ds = _ds(n, times=np.arange(n, dtype=float), x=np.zeros(n))
    out = temporal_split(ds, seed=0)
    counts = out.split_counts()
    assert (counts["train"], counts["test"], counts["validation"]) == (67, 22, 11)
    t_val = out.admit_time[out.split == "validation"]
    t_rest = out.admit_time[out.split != "validation"]
    assert t_rest.max() <= t_val.min()


def test_temporal_split_all_train():
    ds = _ds(10, times=np.arange(10.0), x=np.zeros(10))
    out = temporal_split(ds, {"train": 1.0, "test": 0.0, "validation": 0.0})
    assert set(out.split) == {"train"}


def test_temporal_split_ties_resolve_by_index():
    # records 7..9 share the boundary timestamp; two validation slots go to the later indices
    t = np.array([0, 1, 2, 3, 4, 5, 6, 9, 9, 9], dtype=float)
    out = temporal_split(_ds(10, times=t, x=np.zeros(10)), {"train": 0.6, "test": 0.2, "validation": 0.2})
    assert np.nonzero(out.split == "validation")[0].tolist() == [8, 9]


@pytest.mark.parametrize("n", [7, 13, 100, 1001])
def test_split_fractions_within_one_record(n):
    sizes = split_sizes(n, {"train": 0.67, "test": 0.22, "validation": 0.11})
    assert sum(sizes) == n
    for got, frac in zip(sizes, (0.67, 0.22, 0.11)):
        assert abs(got - frac * n) <= 1


def test_temporal_split_missing_time_is_error():
    t = np.array([0.0, np.nan, 2.0])
    with pytest.raises(SchemaError):
        temporal_split(_ds(3, times=t, x=np.zeros(3)))


def test_dedup_moves_repeats_to_test():
    pids = np.array(["p1", "p1", "p1", "p2", "p3"], dtype=object)
    ds = _ds(5, pids=pids, x=np.zeros(5)).with_split(np.array(["train"] * 5, dtype=object))
    out, report = dedup_patients(ds, seed=0)
    assert list(out.split[:3]).count("train") == 1
    assert list(out.split[:3]).count("test") == 2
    assert report.to_dict() == {"patients_with_repeats": 1, "moved_to_test": 2}
    again, _ = dedup_patients(ds, seed=0)
    assert np.array_equal(again.split, out.split)


def test_dedup_unique_patients_unchanged():
    ds = _ds(4, pids=np.array(["a", "b", "c", "d"], dtype=object), x=np.zeros(4))
    ds = ds.with_split(np.array(["train", "test", "train", "validation"], dtype=object))
    out, report = dedup_patients(ds)
    assert np.array_equal(out.split, ds.split)
    assert report.moved_to_test == 0


def test_no_patient_repeats_in_train_after_pipeline_steps():
    ds, _ = generate_synthetic(SyntheticSpec(n_records=3000, n_noise=1, repeat_patient_fraction=0.3, seed=5))
    out, _ = dedup_patients(temporal_split(ds, seed=1), seed=2)
    train_ids = out.patient_id[out.split == "train"]
    assert len(train_ids) == len(set(train_ids))


def test_dataset_is_immutable():
    ds = _ds(3, x=np.zeros(3))
    with pytest.raises(ValueError):
        ds.target[0] = 1
    with pytest.raises(Exception):
        ds.kinds = {}


def test_synthetic_no_signal_feature():
    spec = SyntheticSpec(n_records=10_000, n_informative=1, n_redundant_per_informative=0, n_noise=0,
                         effect_strengths=(0.0,), seed=1)
    ds, manifest = generate_synthetic(spec)
    assert woe_map(ds.features["inf0"], ds.target).iv < 0.05
    assert manifest["features"]["inf0"]["closed_form_iv"] == pytest.approx(0.0, abs=1e-15)


def test_synthetic_deterministic(tmp_path):
    spec = SyntheticSpec(n_records=500, seed=11)
    a, ma = generate_synthetic(spec)
    b, mb = generate_synthetic(spec)
    write_csv(a, tmp_path / "a.csv")
    write_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert ma == mb


def test_synthetic_strong_effect_matches_closed_form_iv():
    spec = SyntheticSpec(n_records=50_000, n_informative=1, n_redundant_per_informative=1, n_noise=0,
                         category_counts=(2,), effect_strengths=(2.0,), seed=4)
    ds, manifest = generate_synthetic(spec)
    for name in ("inf0", "inf0_dup1"):
        closed = manifest["features"][name]["closed_form_iv"]
        empirical = woe_map(ds.features[name], ds.target).iv
        assert abs(empirical - closed) <= 0.1 * closed


def test_synthetic_manifest_roles():
    spec = SyntheticSpec(n_records=200, n_informative=2, n_redundant_per_informative=2, n_noise=3,
                         n_numeric_noise=1, effect_strengths=(1.0,), seed=0)
    ds, manifest = generate_synthetic(spec)
    assert set(manifest["features"]) == set(ds.feature_names)
    roles = [manifest["features"][f]["role"] for f in ds.feature_names]
    assert roles.count("informative") == 2 and roles.count("redundant") == 4 and roles.count("noise") == 4
    assert manifest["groups"]["inf1"] == ["inf1", "inf1_dup1", "inf1_dup2"]


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        generate_synthetic(SyntheticSpec(category_counts=(1,)))
    with pytest.raises(ValueError):
        generate_synthetic(SyntheticSpec(effect_strengths=(1.0, 2.0)))
