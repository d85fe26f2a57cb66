"""Classifier families, all trained on the standardized five-feature set."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .base import (
    BOOSTING_FAMILIES, DEFAULT_HYPERPARAMETERS, FAMILIES, LINEAR_FAMILIES, N_CLASSES,
    Classifier, DivergenceError, ModelError, ModelSpec, one_hot, predict, predict_proba, softmax,
)
from .knn import KNN, knn_predict
from .linear import LinearSVM, LogisticRegression, hinge_objective, logreg_loss_grad
from .mlp import MLP
from .trees import (
    AdaBoost, DecisionTree, ExtraTrees, Forest, GradBoost, Leaf, NewtonBoost, Split, Tree,
    adaboost_fit, cart_fit, forest_fit, gradboost_fit, newton_leaf_value, samme_alpha,
)

REGISTRY: dict[str, type[Classifier]] = {
    "CART": DecisionTree,
    "RandomForest": Forest,
    "ExtraTrees": ExtraTrees,
    "AdaBoost": AdaBoost,
    "GradBoost": GradBoost,
    "NewtonBoost": NewtonBoost,
    "LogisticRegression": LogisticRegression,
    "LinearSVM": LinearSVM,
    "KNN": KNN,
    "MLP": MLP,
}

# one entry per model in the original comparison; CatBoost is approximated by
# a second, more strongly regularised Newton booster
DEFAULT_MODELS = (
    ModelSpec("CART", name="DecisionTree"),
    ModelSpec("RandomForest"),
    ModelSpec("ExtraTrees"),
    ModelSpec("AdaBoost"),
    ModelSpec("GradBoost", name="GradientBoosting"),
    ModelSpec("NewtonBoost", name="XGBoost"),
    ModelSpec("NewtonBoost", {"max_depth": 6, "reg_lambda": 3.0, "learning_rate": 0.1}, name="CatBoost"),
    ModelSpec("LogisticRegression"),
    ModelSpec("LinearSVM", name="SVM"),
    ModelSpec("KNN"),
    ModelSpec("MLP", name="ANN"),
)


def fit_model(spec: ModelSpec, X, y) -> Classifier:
    cls = REGISTRY[spec.family]
    model = cls(np.shape(X)[1], spec.resolved(), spec.label)
    return model.fit(X, y)


def model_from_dict(d: dict) -> Classifier:
    try:
        cls = REGISTRY[d["family"]]
    except KeyError:
        raise ModelError(f"unknown model family {d.get('family')!r}") from None
    model = cls(d["n_features"], d["hyperparameters"], d.get("name"))
    model._load(d["params"])
    return model


def save_model(model: Classifier, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model.to_dict(), sort_keys=True))
    return path


def load_model(path) -> Classifier:
    return model_from_dict(json.loads(Path(path).read_text()))


__all__ = [
    "AdaBoost", "BOOSTING_FAMILIES", "Classifier", "DEFAULT_HYPERPARAMETERS", "DEFAULT_MODELS", "DecisionTree",
    "DivergenceError", "ExtraTrees", "FAMILIES", "Forest", "GradBoost", "KNN", "LINEAR_FAMILIES", "Leaf",
    "LinearSVM", "LogisticRegression", "MLP", "ModelError", "ModelSpec", "N_CLASSES", "NewtonBoost", "REGISTRY",
    "Split", "Tree", "adaboost_fit", "cart_fit", "fit_model", "forest_fit", "gradboost_fit", "hinge_objective",
    "knn_predict", "load_model", "logreg_loss_grad", "model_from_dict", "newton_leaf_value", "one_hot",
    "predict", "predict_proba", "samme_alpha", "save_model", "softmax",
]
