from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from veinguard.explain import (
    ShapResult, TooManyFeatures, coalition_values, exact_shapley, explain_rows, permutation_importance,
    rank_features, ranking_csv, shapley_by_orderings, shapley_from_values,
)
from veinguard.models import ModelSpec, fit_model


class LinearScore:
    """Stand-in model whose class-0 score is ``w @ x + c``."""

    def __init__(self, w, c=0.0):
        self.w, self.c = np.asarray(w, dtype=float), c

    def predict_proba(self, X):
        s = np.asarray(X) @ self.w + self.c
        return np.column_stack((s, np.zeros_like(s), np.zeros_like(s)))

    def predict(self, X):
        return np.zeros(len(np.atleast_2d(X)), dtype=int)


def test_linear_closed_form():
    rng = np.random.default_rng(0)
    w = rng.normal(size=5)
    bg = rng.normal(size=(30, 5))
    x = rng.normal(size=5)
    phi, base, out = exact_shapley(LinearScore(w, 0.7), bg, x, target=0)
    assert np.allclose(phi, w * (x - bg.mean(axis=0)), atol=1e-12)
    assert base == pytest.approx(w @ bg.mean(axis=0) + 0.7)
    assert out == pytest.approx(w @ x + 0.7)


def test_dummy_feature_gets_zero():
    rng = np.random.default_rng(1)
    w = np.array([1.5, -2.0, 0.0, 0.3])
    phi, _, _ = exact_shapley(LinearScore(w), rng.normal(size=(20, 4)), rng.normal(size=4), target=0)
    assert abs(phi[2]) <= 1e-9


@settings(max_examples=30)
@given(st.lists(st.integers(-50, 50), min_size=8, max_size=8))
def test_weighted_sum_equals_orderings_exactly(values):
    v = [Fraction(x, 7) for x in values]
    assert shapley_from_values(v, 3, exact=True) == shapley_by_orderings(v, 3)


@given(st.lists(st.integers(-9, 9), min_size=16, max_size=16))
def test_efficiency_on_value_tables(values):
    v = [Fraction(x) for x in values]
    phi = shapley_from_values(v, 4, exact=True)
    assert sum(phi) == v[-1] - v[0]


def test_symmetric_players_get_equal_shares():
    # v depends only on coalition size for players 0 and 1
    v = [0, 1, 1, 3, 2, 4, 4, 9]
    phi = shapley_from_values([Fraction(x) for x in v], 3, exact=True)
    assert phi[0] == phi[1]


def test_coalition_values_endpoints():
    bg = np.array([[0.0, 0.0], [2.0, 4.0]])
    x = np.array([10.0, 20.0])
    v = coalition_values(lambda Z: Z.sum(axis=1), bg, x)
    assert v.tolist() == [3.0, 12.0, 21.0, 30.0]


@pytest.fixture(scope="module")
def tree_with_dummy(small_blobs):
    X, y = small_blobs
    rng = np.random.default_rng(5)
    # a constant column can never be split on, so the tree provably ignores it
    Xd = np.column_stack((X[:, :2], np.zeros(len(y))))
    model = fit_model(ModelSpec("CART", {"max_depth": 4}), Xd, y)
    return model, Xd, rng


def test_efficiency_every_row(tree_with_dummy):
    model, X, rng = tree_with_dummy
    bg = X[rng.choice(len(X), 25, replace=False)]
    res = explain_rows(model, bg, X[:40] + rng.normal(0, 0.5, size=(40, 3)) * [1, 1, 0], ("a", "b", "dummy"))
    recon = res.phi.sum(axis=1) + res.row_base_values
    assert np.all(np.abs(recon - res.outputs) <= 1e-6)
    assert np.all(np.abs(res.phi[:, 2]) <= 1e-9)


def test_outputs_are_predicted_class_probability(tree_with_dummy):
    model, X, rng = tree_with_dummy
    bg = X[:10]
    rows = X[100:110]
    res = explain_rows(model, bg, rows, ("a", "b", "dummy"))
    P = model.predict_proba(rows)
    assert np.allclose(res.outputs, P.max(axis=1))
    assert '"instances"' in res.to_json()


def test_width_guard_and_empty_background():
    with pytest.raises(TooManyFeatures, match="permutation_importance"):
        exact_shapley(LinearScore(np.ones(21)), np.zeros((2, 21)), np.zeros(21), target=0)
    with pytest.raises(ValueError):
        exact_shapley(LinearScore(np.ones(2)), np.zeros((0, 2)), np.zeros(2), target=0)


def test_rank_features():
    phi = np.array([[3.0, -1.0, 2.0], [-3.0, 1.0, -2.0]])
    res = ShapResult(phi, 0.0, np.zeros(2), ("f0", "f1", "f2"), np.zeros(2, dtype=int))
    assert [n for n, _ in rank_features(res)] == ["f0", "f2", "f1"]
    zero = ShapResult(np.zeros((2, 3)), 0.0, np.zeros(2), ("f0", "f1", "f2"), np.zeros(2, dtype=int))
    assert [n for n, _ in rank_features(zero)] == ["f0", "f1", "f2"]
    assert ranking_csv(rank_features(res)).splitlines()[0] == "feature,mean_abs_shap"
    with pytest.raises(ValueError):
        rank_features(ShapResult(np.empty((0, 3)), 0.0, np.empty(0), ("a", "b", "c"), np.empty(0)))


@pytest.fixture(scope="module")
def single_feature_task():
    rng = np.random.default_rng(2)
    y = np.repeat([0, 1, 2], 200)
    X = np.column_stack((y + rng.uniform(-0.3, 0.3, size=600), rng.normal(size=600)))
    model = fit_model(ModelSpec("CART", {"max_depth": 3}), X, y)
    return model, X, y


def test_permutation_importance_oracle(single_feature_task):
    model, X, y = single_feature_task
    res = permutation_importance(model, X, y, n_repeats=5, seed=0)
    assert res.baseline == 1.0
    # shuffling the informative column leaves chance-level macro-F1
    assert 1.0 - res.mean[0] == pytest.approx(1 / 3, abs=0.06)
    assert abs(res.mean[1]) <= 2 * res.std[1] + 1e-12


def test_permutation_importance_deterministic(single_feature_task):
    model, X, y = single_feature_task
    a = permutation_importance(model, X, y, n_repeats=1, seed=3)
    b = permutation_importance(model, X, y, n_repeats=1, seed=3)
    assert np.array_equal(a.drops, b.drops)
    with pytest.raises(ValueError):
        permutation_importance(model, X, y, n_repeats=0)
