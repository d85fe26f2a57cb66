import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from veinguard.dataset import SchemaError
from veinguard.preprocess import (
    FEATURES, Imputer, LabeledSet, SmoteConfig, SmoteError, SplitError, derive_snr, fit_standardizer,
    read_matrix_csv, select_features, smote, smote_with_provenance, snr_column, split_counts,
    stratified_split, stratified_split_indices, transform, write_matrix_csv,
)


def lset(X, y=None, names=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.zeros(len(X), dtype=int) if y is None else np.asarray(y)
    names = names or tuple(f"f{i}" for i in range(X.shape[1]))
    return LabeledSet(X, y, names)


def test_select_features(sim_records):
    data = select_features(sim_records)
    assert data.feature_names == ("Protocol", "ThroughputKbps", "MeanDelay", "RxPackets", "FlowDuration")
    assert data.X.shape == (len(sim_records), 5)
    tcp = [i for i, r in enumerate(sim_records) if r.Protocol.value == "TCP"]
    assert np.all(data.X[tcp, 0] == 0.0)
    assert set(np.unique(data.X[:, 0])) == {0.0, 1.0}


def test_select_features_empty():
    data = select_features([])
    assert data.X.shape == (0, 5) and len(data) == 0
    assert data.feature_names == FEATURES


def test_select_features_missing_column():
    with pytest.raises(SchemaError):
        select_features([SimpleNamespace(Protocol="TCP", TrafficLabel=1)])


@pytest.mark.parametrize("s,n,expected", [(-60, -90, 30), (-70, -70, 0), (-95, -90, -5)])
def test_derive_snr(s, n, expected):
    assert derive_snr(SimpleNamespace(AvgSignal_dBm=s, AvgNoise_dBm=n)) == expected


@given(st.floats(-200, 50))
def test_snr_identity(s):
    assert derive_snr(SimpleNamespace(AvgSignal_dBm=s, AvgNoise_dBm=s)) == 0.0


def test_snr_imputes_non_finite():
    recs = [SimpleNamespace(AvgSignal_dBm=v, AvgNoise_dBm=-90.0) for v in (-60.0, -70.0, float("nan"), -50.0)]
    assert snr_column(recs).tolist() == [30.0, 20.0, 30.0, 40.0]


def test_imputer_uses_training_median():
    imp = Imputer.fit(lset([[1.0], [3.0], [np.inf], [5.0]]))
    assert imp.medians.tolist() == [3.0]
    out = imp.transform(lset([[np.nan], [2.0]]))
    assert out.X.ravel().tolist() == [3.0, 2.0]


def test_standardizer_hand_example():
    s = fit_standardizer(lset([2.0, 4.0, 6.0]))
    assert s.means[0] == 4.0
    assert s.stds[0] == pytest.approx(math.sqrt(8 / 3))
    assert np.allclose(transform(s, lset([2.0, 4.0, 6.0])).X.ravel(), [-1.2247, 0.0, 1.2247], atol=1e-4)


def test_standardizer_constant_column():
    with pytest.warns(RuntimeWarning):
        s = fit_standardizer(lset([5.0, 5.0, 5.0]))
    assert s.stds[0] == 1.0
    assert transform(s, lset([5.0, 5.0, 5.0])).X.ravel().tolist() == [0.0, 0.0, 0.0]


finite_cols = hnp.arrays(np.float64, st.tuples(st.integers(3, 30), st.integers(1, 4)),
                         elements=st.floats(-1e4, 1e4, allow_subnormal=False))


@given(finite_cols)
def test_standardized_training_moments(X):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s = fit_standardizer(lset(X))
    Z = transform(s, lset(X)).X
    assert np.all(np.abs(Z.mean(axis=0)) <= 1e-9)
    varied = X.std(axis=0) > 1e-6 * np.maximum(1.0, np.abs(X).max(axis=0))
    assert np.allclose(Z.std(axis=0)[varied], 1.0, atol=1e-9)


@given(finite_cols)
def test_standardize_round_trip(X):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s = fit_standardizer(lset(X))
    back = s.inverse_transform(transform(s, lset(X))).X
    assert np.allclose(back, X, rtol=1e-12, atol=1e-12 * np.abs(X).max() + 1e-300)


def test_split_counts_largest_remainder():
    counts = split_counts([60, 30, 10], 0.25)
    assert counts.tolist() == [15, 8, 2]
    assert counts.sum() == 25


@given(st.lists(st.integers(2, 500), min_size=1, max_size=5), st.floats(0.05, 0.95))
def test_split_counts_total_and_bounds(counts, f):
    out = split_counts(counts, f)
    assert out.sum() == math.floor(sum(counts) * f + 0.5)
    assert np.all(np.abs(out - np.asarray(counts) * f) < 1.0 + 1e-9)


@given(st.lists(st.integers(0, 2), min_size=12, max_size=200), st.integers(0, 2**32 - 1))
def test_split_partitions(y, seed):
    y = np.array(y)
    if np.any(np.bincount(y, minlength=3)[np.unique(y)] < 2):
        return
    train, test = stratified_split_indices(y, 0.25, seed)
    assert np.intersect1d(train, test).size == 0
    assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(len(y)))
    for c in np.unique(y):
        n_c = np.sum(y == c)
        assert abs(np.sum(y[train] == c) - 0.75 * n_c) <= 1.0


def test_split_deterministic():
    y = np.repeat([0, 1, 2], [60, 30, 10])
    a = stratified_split_indices(y, 0.25, 5)
    b = stratified_split_indices(y, 0.25, 5)
    assert all(np.array_equal(p, q) for p, q in zip(a, b))
    _, test = stratified_split(lset(np.arange(100.0), y), 0.25, 5)
    assert test.class_counts().tolist() == [15, 8, 2]


def test_split_rejects_singleton_class():
    with pytest.raises(SplitError):
        stratified_split_indices(np.array([0, 0, 0, 1]), 0.25, 0)


def imbalanced(seed, n=(40, 7, 3), d=3):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c * 4, 1, size=(k, d)) for c, k in enumerate(n)])
    return lset(X, np.repeat(np.arange(3), n))


def point_segment_residual(p, a, b):
    ab = b - a
    t = 0.0 if not np.any(ab) else np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return np.linalg.norm(p - (a + t * ab))


@pytest.mark.parametrize("seed", range(10))
def test_smote_properties(seed):
    train = imbalanced(seed)
    res = smote_with_provenance(train, SmoteConfig(seed=seed))
    out = res.data
    assert out.class_counts().tolist() == [40, 40, 40]
    assert np.array_equal(out.X[: len(train)], train.X)
    assert np.array_equal(out.y[: len(train)], train.y)
    synth = out.X[len(train):]
    for p, (i, j), c in zip(synth, res.parents, out.y[len(train):]):
        assert train.y[i] == train.y[j] == c
        assert point_segment_residual(p, train.X[i], train.X[j]) <= 1e-9


def test_smote_balanced_is_noop():
    data = imbalanced(0, n=(5, 5, 5))
    out = smote(data)
    assert np.array_equal(out.X, data.X) and np.array_equal(out.y, data.y)


def test_smote_two_point_minority():
    data = lset([[5.0, 5.0], [6.0, 5.0], [7.0, 5.0], [0.0, 0.0], [1.0, 1.0]], [0, 0, 0, 1, 1])
    out = smote(data, SmoteConfig(k_neighbors=1, target={1: 3}))
    t = out.X[-1]
    assert out.y[-1] == 1
    assert t[0] == pytest.approx(t[1]) and 0.0 <= t[0] <= 1.0


def test_smote_needs_two_members():
    with pytest.raises(SmoteError):
        smote(lset([[0.0], [1.0], [2.0]], [0, 0, 1]))


def test_smote_k_validated():
    with pytest.raises(SmoteError):
        SmoteConfig(k_neighbors=0)


def test_matrix_csv_round_trip(tmp_path):
    data = imbalanced(1)
    s = fit_standardizer(data)
    path = write_matrix_csv(transform(s, data), tmp_path / "m.csv", s)
    assert path.read_text().startswith("# standardizer: means=")
    back, s2 = read_matrix_csv(path)
    assert np.array_equal(back.X, transform(s, data).X)
    assert np.array_equal(s2.means, s.means) and np.array_equal(s2.stds, s.stds)
