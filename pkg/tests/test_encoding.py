import json
import math
import warnings

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import woe_iv
from woeclique.encoding import (
    CategoryStats,
    WoEEncoder,
    WoeMap,
    apply_woe,
    category_stats,
    information_value,
    numeric_iv,
    numeric_woe_map,
    variance_filter,
    woe,
    woe_map,
)
from woeclique.exceptions import DegenerateDataError, InfiniteWoEError, SchemaError, UnseenCategoryWarning


def _stats(pos, neg):
    return [CategoryStats(f"c{i}", p, n) for i, (p, n) in enumerate(zip(pos, neg))]


def test_category_stats_tally():
    stats = category_stats(["A", "A", "B"], [1, 0, 1])
    assert [(s.category, s.positives, s.negatives) for s in stats] == [("A", 1, 1), ("B", 1, 0)]


def test_category_stats_six_records():
    stats = category_stats(["x", "y", "z", "x", "y", "x"], [1, 1, 0, 0, 0, 1])
    assert {s.category: (s.positives, s.negatives) for s in stats} == {"x": (2, 1), "y": (1, 1), "z": (0, 1)}


def test_category_stats_empty_is_error():
    with pytest.raises(DegenerateDataError):
        category_stats([], [])


def test_equal_shares_give_zero_woe():
    entries = woe(_stats([2, 8], [4, 16]), (10, 20), smoothing=0)
    assert entries[0].woe == pytest.approx(0.0, abs=1e-15)
    assert entries[1].woe == pytest.approx(0.0, abs=1e-15)


def test_woe_ln2_hand_case():
    # positive share 10/100, negative share 5/100
    entries = woe(_stats([10, 90], [5, 95]), (100, 100), smoothing=0)
    assert entries[0].woe == pytest.approx(math.log(2), abs=1e-15)


def test_single_category_has_zero_woe_and_iv():
    m = woe_map(["a"] * 5, [1, 0, 1, 0, 0], smoothing=0)
    assert m.entries[0].woe == 0.0
    assert m.iv == 0.0


def test_iv_hand_case():
    entries = woe(_stats([8, 2], [2, 8]), (10, 10), smoothing=0)
    iv = information_value(entries, (10, 10), smoothing=0)
    assert iv == pytest.approx(1.2 * math.log(4), abs=1e-12)
    assert round(iv, 6) == 1.663553


def test_iv_single_category_is_zero():
    entries = woe(_stats([3], [7]), (3, 7), smoothing=0)
    assert information_value(entries, (3, 7), smoothing=0) == 0.0


def test_iv_permutation_invariant():
    pos, neg = [5, 9, 2, 7], [11, 3, 8, 6]
    a = information_value(woe(_stats(pos, neg), (23, 28), 0), (23, 28), 0)
    order = [2, 0, 3, 1]
    b = information_value(woe(_stats([pos[i] for i in order], [neg[i] for i in order]), (23, 28), 0), (23, 28), 0)
    assert a == pytest.approx(b, abs=1e-14)


def test_zero_cell_without_smoothing_raises():
    with pytest.raises(InfiniteWoEError):
        woe(_stats([0, 5], [3, 2]), (5, 5), smoothing=0)


def test_zero_cell_with_smoothing_is_finite():
    entries = woe(_stats([0, 5], [3, 2]), (5, 5), smoothing=0.5)
    assert all(math.isfinite(e.woe) for e in entries)


tallies = st.lists(st.tuples(st.integers(1, 500), st.integers(1, 500)), min_size=1, max_size=12)


@settings(max_examples=200, deadline=None)
@given(tallies, st.sampled_from([0.0, 0.5, 1.0]))
def test_matches_oracle(cells, s):
    pos = [c[0] for c in cells]
    neg = [c[1] for c in cells]
    totals = (sum(pos), sum(neg))
    entries = woe(_stats(pos, neg), totals, s)
    ref_woes, ref_iv = woe_iv(pos, neg, s)
    for e, r in zip(entries, ref_woes):
        assert abs(e.woe - r) <= 1e-12
    assert abs(information_value(entries, totals, s) - ref_iv) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(tallies)
def test_iv_nonnegative(cells):
    pos = [c[0] for c in cells]
    neg = [c[1] for c in cells]
    totals = (sum(pos), sum(neg))
    assert information_value(woe(_stats(pos, neg), totals, 0), totals, 0) >= -1e-15


def test_woe_sign_convention():
    # "a" over-represented among positives
    m = woe_map(["a"] * 8 + ["b"] * 2 + ["a"] * 2 + ["b"] * 8, [1] * 10 + [0] * 10)
    look = m.lookup()
    assert look["a"] > 0 > look["b"]


def test_smoothing_continuity():
    pos, neg = [5, 9, 2], [11, 3, 8]
    exact = woe(_stats(pos, neg), (16, 22), 0)
    near = woe(_stats(pos, neg), (16, 22), 1e-9)
    assert max(abs(a.woe - b.woe) for a, b in zip(exact, near)) < 1e-6


def test_numeric_iv_no_signal():
    rng = np.random.default_rng(0)
    assert numeric_iv(rng.normal(size=10_000), rng.integers(0, 2, 10_000)) < 0.05


def test_numeric_iv_perfect_separation_without_smoothing_raises():
    x = np.arange(20.0)
    y = (x >= 10).astype(int)
    with pytest.raises(InfiniteWoEError):
        numeric_woe_map(x, y, prebins=2, smoothing=0)


def test_numeric_iv_twenty_record_hand_fixture():
    # quantile cuts at 5 equal groups of 4; positives per group 1, 1, 2, 3, 3 (10 pos, 10 neg)
    x = np.arange(1.0, 21.0)
    y = np.array([1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 1, 1, 1, 0, 1, 1, 1, 0])
    m = numeric_woe_map(x, y, prebins=5, smoothing=0)
    assert m.cuts == (4.0, 8.0, 12.0, 16.0)
    pos, neg = [1, 1, 2, 3, 3], [3, 3, 2, 1, 1]
    hand = sum((p / 10 - n / 10) * math.log((p / 10) / (n / 10)) for p, n in zip(pos, neg))
    assert m.iv == pytest.approx(hand, abs=1e-12)


def test_numeric_iv_constant_column_is_zero():
    assert numeric_iv(np.ones(50), np.r_[np.ones(25), np.zeros(25)]) == 0.0


def test_apply_woe_lookup_and_roundtrip():
    values = ["a", "b", "a", "c", "b", "a"]
    y = [1, 0, 1, 0, 1, 0]
    m = woe_map(values, y, smoothing=0.5)
    out = apply_woe(values, m)
    look = m.lookup()
    assert out.tolist() == [look[v] for v in values]
    assert len(out) == len(values)


def test_apply_woe_unseen_category_warns_and_maps_to_zero():
    m = woe_map(["a", "b", "a", "b"], [1, 0, 0, 1])
    with pytest.warns(UnseenCategoryWarning):
        out = apply_woe(["a", "zzz"], m)
    assert out[1] == 0.0


def test_apply_woe_numeric_rejects_missing():
    m = numeric_woe_map(np.arange(10.0), [0, 1] * 5, prebins=2)
    with pytest.raises(SchemaError):
        apply_woe([1.0, np.nan], m)


def test_variance_filter_examples():
    frame = pd.DataFrame({
        "const": [0.7] * 4,
        # population variance of (-v, v, -v, v) is v^2
        "keep": [-math.sqrt(0.031), math.sqrt(0.031)] * 2,
        "hand": [0.0, 0.0, 0.25, -0.25],  # mean 0, variance (0.0625*2)/4 = 0.03125
        "low": [0.1, -0.1, 0.15, -0.15],  # (0.01+0.01+0.0225+0.0225)/4 = 0.01625
        "tiny": [0.0, 0.25, 0.0, 0.0],  # mean 0.0625; variance 0.01171875
    })
    retained, report = variance_filter(frame, 0.03)
    assert retained == ["keep", "hand"]
    assert report.variances["hand"] == pytest.approx(0.03125)
    assert report.variances["tiny"] == pytest.approx(0.01171875)
    assert set(report.dropped) == {"const", "low", "tiny"}


def test_variance_filter_hand_0125_dropped():
    # variance of (0,0,0,a) is 3a^2/16; choose a^2 = 0.0125*16/3
    a = math.sqrt(0.0125 * 16 / 3)
    col = [0.0, 0.0, 0.0, a]
    retained, report = variance_filter(pd.DataFrame({"x": col}), 0.03)
    assert report.variances["x"] == pytest.approx(0.0125, abs=1e-15)
    assert retained == []


def test_woe_map_json_roundtrip():
    m = woe_map(["a", "b", "a", "c"], [1, 0, 0, 1])
    d = json.loads(json.dumps(m.to_dict()))
    assert set(d) >= {"feature", "totals", "entries", "iv", "smoothing"}
    assert WoeMap.from_dict(d) == m
    n = numeric_woe_map(np.arange(30.0), [0, 1, 1] * 10, prebins=3)
    assert WoeMap.from_dict(json.loads(json.dumps(n.to_dict()))) == n


def test_encoder_fit_transform():
    X = pd.DataFrame({"cat": ["a", "b", "a", "b", "c", "c"], "num": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]})
    y = [1, 0, 1, 0, 1, 0]
    enc = WoEEncoder(numeric_prebins=2).fit(X, y)
    assert enc.categorical_features_ == ["cat"]
    out = enc.transform(X)
    assert list(out.columns) == ["cat", "num"]
    assert out["cat"].iloc[0] == enc.woe_maps_["cat"].lookup()["a"]
    assert enc.iv_["cat"] == enc.woe_maps_["cat"].iv


def test_encoder_missing_category_label():
    X = pd.DataFrame({"cat": ["a", None, "a", None]})
    enc = WoEEncoder().fit(X, [1, 0, 0, 1])
    assert "missing outcome" in enc.woe_maps_["cat"].lookup()


def test_encoder_unseen_warns():
    enc = WoEEncoder().fit(pd.DataFrame({"c": ["a", "b", "a", "b"]}), [1, 0, 0, 1])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = enc.transform(pd.DataFrame({"c": ["q"]}))
    assert out["c"].iloc[0] == 0.0
    assert any(issubclass(w.category, UnseenCategoryWarning) for w in caught)
