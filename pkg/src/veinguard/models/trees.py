"""CART, random forests, extra trees, SAMME AdaBoost and softmax gradient boosting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._tree_kernels import MODE_GINI, MODE_NEWTON, MODE_VARIANCE, build_tree, forest_reduce
from .base import N_CLASSES, Classifier, one_hot, softmax


@dataclass
class Split:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


@dataclass
class Leaf:
    class_distribution: np.ndarray


TreeNode = Union[Split, Leaf]


@dataclass
class Tree:
    """Flat array tree. ``feature[i] == -1`` marks a leaf; ``value`` holds leaf outputs."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def depth(self, node: int = 0) -> int:
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def predict_values(self, X) -> np.ndarray:
        return forest_reduce(X, pack([self]), np.zeros(1), np.ones(1), self.value.shape[1])

    def to_node(self, node: int = 0) -> TreeNode:
        if self.feature[node] < 0:
            return Leaf(self.value[node].copy())
        return Split(int(self.feature[node]), float(self.threshold[node]),
                     self.to_node(int(self.left[node])), self.to_node(int(self.right[node])))

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64).reshape(len(d["feature"]), -1),
        )


def pack(trees: list[Tree]):
    """Concatenate trees into one node table for the batch kernels."""
    offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]]).astype(np.int64)
    left = np.concatenate([np.where(t.left >= 0, t.left + o, -1) for t, o in zip(trees, offsets)])
    right = np.concatenate([np.where(t.right >= 0, t.right + o, -1) for t, o in zip(trees, offsets)])
    return (
        np.ascontiguousarray(np.concatenate([t.feature for t in trees])),
        np.ascontiguousarray(np.concatenate([t.threshold for t in trees])),
        np.ascontiguousarray(left),
        np.ascontiguousarray(right),
        np.ascontiguousarray(np.vstack([t.value for t in trees])),
        offsets,
    )


def _grow(X, S, mode, **kw) -> Tree:
    return Tree(*build_tree(X, S, kw.pop("rows", None), mode, **kw))


def _resolve_max_features(spec, d: int) -> int:
    if spec in (None, "all"):
        return d
    if spec == "sqrt":
        return max(1, int(math.sqrt(d)))
    return max(1, min(d, int(spec)))


def cart_fit(X, y, max_depth: int = 12, min_leaf: int = 2, sample_weight=None) -> Tree:
    """Greedy Gini tree; leaves hold (weighted) class distributions."""
    X = np.asarray(X, dtype=np.float64)
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    S = one_hot(y) * w[:, None]
    return _grow(X, S, MODE_GINI, max_depth=max_depth, min_leaf=min_leaf)


class DecisionTree(Classifier):
    family = "CART"

    def fit(self, X, y):
        hp = self.hyperparameters
        self.tree = cart_fit(X, y, hp["max_depth"], hp["min_leaf"])
        return self

    def _proba(self, X):
        return self.tree.predict_values(X)

    def _params(self):
        return {"tree": self.tree.to_dict()}

    def _load(self, params):
        self.tree = Tree.from_dict(params["tree"])


class Forest(Classifier):
    """Bagged or extremely randomised trees, averaged leaf distributions.

    Each tree draws from its own stream spawned off the master seed, so the
    forest does not depend on the order the trees are built in.
    """

    family = "RandomForest"

    def fit(self, X, y):
        hp = self.hyperparameters
        X = np.ascontiguousarray(X, dtype=np.float64)
        n, d = X.shape
        extra = self.family == "ExtraTrees"
        bootstrap = hp.get("bootstrap", False) and not extra
        max_features = _resolve_max_features(hp.get("max_features"), d)
        S = one_hot(y)
        self.trees = []
        for ss in np.random.SeedSequence(hp.get("seed", 0)).spawn(hp["n_estimators"]):
            rng = np.random.default_rng(ss)
            rows = rng.integers(0, n, size=n) if bootstrap else None
            need = (2 * n + 1) * (d + d) if (extra or max_features < d) else 0
            rand = rng.random(min(need, 1 << 20))
            self.trees.append(_grow(X, S, MODE_GINI, rows=rows, max_depth=hp["max_depth"],
                                    min_leaf=hp["min_leaf"], max_features=max_features, extra=extra, rand=rand))
        self._packed = pack(self.trees)
        return self

    def _proba(self, X):
        T = len(self.trees)
        return forest_reduce(X, self._packed, np.zeros(T), np.full(T, 1.0 / T), N_CLASSES)

    def _params(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    def _load(self, params):
        self.trees = [Tree.from_dict(t) for t in params["trees"]]
        self._packed = pack(self.trees)


class ExtraTrees(Forest):
    family = "ExtraTrees"


def forest_fit(X, y, n_trees: int, mode: str = "bootstrap-random-subspace", seed: int = 0,
               max_depth: int = 12, min_leaf: int = 2, max_features="sqrt", bootstrap: bool = True) -> Forest:
    if mode == "extra-random":
        model = ExtraTrees(np.shape(X)[1], {"n_estimators": n_trees, "max_depth": max_depth, "min_leaf": min_leaf,
                                            "max_features": max_features, "seed": seed})
    elif mode == "bootstrap-random-subspace":
        model = Forest(np.shape(X)[1], {"n_estimators": n_trees, "max_depth": max_depth, "min_leaf": min_leaf,
                                        "max_features": max_features, "bootstrap": bootstrap, "seed": seed})
    else:
        raise ValueError(f"unknown forest mode {mode!r}")
    return model.fit(X, y)


def samme_alpha(err: float, n_classes: int = N_CLASSES) -> float:
    return math.log((1.0 - err) / err) + math.log(n_classes - 1)


class AdaBoost(Classifier):
    """Multiclass SAMME over shallow Gini trees.

    Probabilities are the normalised weighted votes, so the argmax agrees
    with the SAMME decision rule.
    """

    family = "AdaBoost"

    def fit(self, X, y):
        hp = self.hyperparameters
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        K = N_CLASSES
        w = np.full(len(y), 1.0 / len(y))
        self.trees, self.alphas = [], []
        self.weight_history = [w.copy()]
        for _ in range(hp["n_estimators"]):
            tree = cart_fit(X, y, max_depth=hp["base_depth"], min_leaf=1, sample_weight=w)
            winner = np.argmax(tree.value, axis=1)
            tree.value = one_hot(winner, K)
            miss = np.argmax(tree.predict_values(X), axis=1) != y
            err = float(w[miss].sum() / w.sum())
            if err <= 0.0:
                self.trees.append(tree)
                self.alphas.append(samme_alpha(1e-10, K) if self.trees[:-1] else 1.0)
                break
            if err >= 1.0 - 1.0 / K:
                if not self.trees:
                    self.trees.append(tree)
                    self.alphas.append(1.0)
                break
            alpha = samme_alpha(err, K)
            self.trees.append(tree)
            self.alphas.append(alpha)
            w = w * np.exp(alpha * miss)
            w /= w.sum()
            self.weight_history.append(w.copy())
        self.alphas = np.asarray(self.alphas)
        self._packed = pack(self.trees)
        return self

    def _proba(self, X):
        votes = forest_reduce(X, self._packed, np.zeros(len(self.trees)), self.alphas, N_CLASSES)
        return votes / self.alphas.sum()

    def _params(self):
        return {"trees": [t.to_dict() for t in self.trees], "alphas": self.alphas.tolist()}

    def _load(self, params):
        self.trees = [Tree.from_dict(t) for t in params["trees"]]
        self.alphas = np.asarray(params["alphas"], dtype=np.float64)
        self._packed = pack(self.trees)


def newton_leaf_value(grad_sum: float, hess_sum: float, reg_lambda: float) -> float:
    return -grad_sum / (hess_sum + reg_lambda)


class GradBoost(Classifier):
    """Softmax gradient boosting with one regression tree per class per stage.

    ``GradBoost`` fits trees to the residuals ``y_k - p_k`` (leaf = mean
    residual). ``NewtonBoost`` splits and sets leaves from gradient and
    hessian sums, leaf = ``-G / (H + lambda)``.
    """

    family = "GradBoost"
    newton = False

    def fit(self, X, y):
        hp = self.hyperparameters
        X = np.ascontiguousarray(X, dtype=np.float64)
        Y = one_hot(y)
        n = X.shape[0]
        lr = hp["learning_rate"]
        lam = hp.get("reg_lambda", 0.0)
        F = np.zeros((n, N_CLASSES))
        self.trees = []
        for _ in range(hp["n_estimators"]):
            P = softmax(F)
            for k in range(N_CLASSES):
                if self.newton:
                    g = P[:, k] - Y[:, k]
                    h = np.maximum(P[:, k] * (1.0 - P[:, k]), 1e-16)
                    tree = _grow(X, np.column_stack((g, h)), MODE_NEWTON, lam=lam,
                                 max_depth=hp["max_depth"], min_leaf=hp["min_leaf"])
                else:
                    r = Y[:, k] - P[:, k]
                    tree = _grow(X, np.column_stack((np.ones(n), r)), MODE_VARIANCE,
                                 max_depth=hp["max_depth"], min_leaf=hp["min_leaf"])
                F[:, k] += lr * tree.predict_values(X)[:, 0]
                self.trees.append(tree)
        self._packed = pack(self.trees)
        return self

    def decision_function(self, X):
        X = self._check(X)
        T = len(self.trees)
        cols = np.arange(T) % N_CLASSES
        return forest_reduce(X, self._packed, cols, np.full(T, self.hyperparameters["learning_rate"]), N_CLASSES)

    def _proba(self, X):
        return softmax(self.decision_function(X))

    def _params(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    def _load(self, params):
        self.trees = [Tree.from_dict(t) for t in params["trees"]]
        self._packed = pack(self.trees)


class NewtonBoost(GradBoost):
    family = "NewtonBoost"
    newton = True


def gradboost_fit(X, y, n_stages: int, learning_rate: float, mode: str = "first-order",
                  max_depth: int = 3, min_leaf: int = 2, reg_lambda: float = 1.0) -> GradBoost:
    hp = {"n_estimators": n_stages, "learning_rate": learning_rate, "max_depth": max_depth, "min_leaf": min_leaf}
    if mode == "newton":
        return NewtonBoost(np.shape(X)[1], {**hp, "reg_lambda": reg_lambda}).fit(X, y)
    if mode == "first-order":
        return GradBoost(np.shape(X)[1], hp).fit(X, y)
    raise ValueError(f"unknown boosting mode {mode!r}")


def adaboost_fit(X, y, n_rounds: int, base_depth: int = 1) -> AdaBoost:
    return AdaBoost(np.shape(X)[1], {"n_estimators": n_rounds, "base_depth": base_depth}).fit(X, y)
