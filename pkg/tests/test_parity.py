"""The compiled kernels and their numpy fallbacks must agree exactly."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from veinguard._jit import USE_NUMBA, py_func
from veinguard.flowsim.channel import run_channel
from veinguard.models._tree_kernels import (
    MODE_GINI, MODE_NEWTON, MODE_VARIANCE, build_tree_nb, build_tree_numpy, forest_reduce_nb, forest_reduce_numpy,
)
from veinguard.models.base import one_hot
from veinguard.models.trees import Tree, pack
from veinguard.neighbors import _knn_kernel, _knn_numpy

pytestmark = pytest.mark.skipif(not USE_NUMBA, reason="numba disabled; nothing to compare")


def _stats(mode, y, rng):
    if mode == MODE_GINI:
        return one_hot(y) * rng.uniform(0.5, 2.0, size=(len(y), 1))
    if mode == MODE_VARIANCE:
        return np.column_stack((np.ones(len(y)), rng.normal(size=len(y))))
    p = rng.uniform(0.05, 0.95, size=len(y))
    return np.column_stack((p - (y == 0), p * (1 - p)))


@pytest.mark.parametrize("mode", [MODE_GINI, MODE_VARIANCE, MODE_NEWTON])
@pytest.mark.parametrize("extra,max_features,bootstrap", [(False, 4, False), (False, 2, True), (True, 2, False),
                                                          (True, 4, True)])
def test_tree_builders_identical(mode, extra, max_features, bootstrap):
    rng = np.random.default_rng(mode * 10 + max_features)
    X = np.round(rng.normal(size=(300, 4)), 1)  # rounding creates many ties
    y = rng.integers(0, 3, size=300)
    S = np.ascontiguousarray(_stats(mode, y, rng))
    rows = rng.integers(0, 300, size=300) if bootstrap else np.arange(300)
    rand = rng.random(5000)
    args = (X, S, rows.astype(np.int64), mode, 1.0, 8, 2, max_features, extra, rand)
    for a, b in zip(build_tree_nb(*args), build_tree_numpy(*args)):
        assert np.array_equal(a, b)


def test_forest_reduce_identical():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 3))
    y = rng.integers(0, 3, size=200)
    trees = [Tree(*build_tree_nb(X, one_hot(y), rng.integers(0, 200, 200), MODE_GINI, 0.0, 5, 1, 2, False,
                                 rng.random(4000))) for _ in range(7)]
    packed = pack(trees)
    cols, w = np.zeros(7, dtype=np.int64), rng.uniform(0.1, 1, size=7)
    q = rng.normal(size=(500, 3))
    assert np.array_equal(forest_reduce_nb(q, *packed, cols, w, 3), forest_reduce_numpy(q, *packed, cols, w, 3))


@pytest.mark.parametrize("exclude", [False, True])
def test_knn_identical(exclude):
    rng = np.random.default_rng(1)
    train = np.round(rng.normal(size=(400, 3)), 1)
    query = train if exclude else np.round(rng.normal(size=(300, 3)), 1)
    ex = np.arange(len(query)) if exclude else np.full(len(query), -1)
    assert np.array_equal(_knn_kernel(train, query, 6, ex), _knn_numpy(train, query, 6, ex))


def test_channel_identical():
    rng = np.random.default_rng(2)
    n = 3000
    t = np.sort(rng.uniform(0, 5, size=n))
    flow = rng.integers(0, 4, size=n)
    size = rng.choice([160, 1024, 1448], size=n)
    args = (t, flow, size, rng.random(n) < 0.95, rng.random(n), rng.uniform(0, 0.3, size=n),
            rng.uniform(0, 1e-6, size=n), rng.normal(-60, 3, size=n), rng.normal(-95, 1, size=n), 4, 6e6, 20)
    for a, b in zip(run_channel(*args), py_func(run_channel)(*args)):
        assert np.array_equal(a, b)


SCRIPT = """
import json
import numpy as np
from veinguard.flowsim import SimConfig, run_many
from veinguard.preprocess import select_features
from veinguard.models import ModelSpec, fit_model
recs = run_many(SimConfig(duration_s=10.0), 3)
data = select_features(recs)
out = {"records": [r.feature_tuple()[-2] for r in recs]}
for fam in ("RandomForest", "NewtonBoost", "KNN"):
    m = fit_model(ModelSpec(fam, {"n_estimators": 5} if fam != "KNN" else {"k": 3}), data.X, data.y)
    out[fam] = m.predict_proba(data.X).tolist()
print(json.dumps(out, default=float))
"""


def test_end_to_end_fallback_matches(tmp_path):
    def run(disable):
        env = dict(os.environ, VEINGUARD_DISABLE_NUMBA="1" if disable else "0")
        res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
        return json.loads(res.stdout)
    assert run(True) == run(False)
