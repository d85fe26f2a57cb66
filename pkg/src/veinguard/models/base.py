"""Model specifications and the shared classifier interface."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

N_CLASSES = 3

FAMILIES = (
    "CART", "RandomForest", "ExtraTrees", "AdaBoost", "GradBoost", "NewtonBoost",
    "LogisticRegression", "LinearSVM", "KNN", "MLP",
)
BOOSTING_FAMILIES = ("AdaBoost", "GradBoost", "NewtonBoost")
LINEAR_FAMILIES = ("LogisticRegression", "LinearSVM")

DEFAULT_HYPERPARAMETERS = {
    "CART": {"max_depth": 12, "min_leaf": 2},
    "RandomForest": {"n_estimators": 100, "max_depth": 12, "min_leaf": 2, "max_features": "sqrt",
                     "bootstrap": True, "seed": 0},
    "ExtraTrees": {"n_estimators": 100, "max_depth": 12, "min_leaf": 2, "max_features": "sqrt", "seed": 0},
    "AdaBoost": {"n_estimators": 100, "base_depth": 1},
    "GradBoost": {"n_estimators": 200, "learning_rate": 0.1, "max_depth": 3, "min_leaf": 2},
    "NewtonBoost": {"n_estimators": 200, "learning_rate": 0.1, "max_depth": 6, "min_leaf": 2, "reg_lambda": 1.0},
    "LogisticRegression": {"epochs": 500, "learning_rate": 0.1},
    "LinearSVM": {"epochs": 30, "learning_rate": 0.1, "C": 1.0, "batch_size": 32, "seed": 0},
    "KNN": {"k": 5},
    "MLP": {"epochs": 100, "batch_size": 32, "patience": 10, "learning_rate": 0.01,
            "dropout_rate": 0.3, "validation_fraction": 0.2, "seed": 0},
}

_COUNT_KEYS = ("max_depth", "min_leaf", "n_estimators", "base_depth", "epochs", "batch_size", "patience", "k")
_RATE_KEYS = ("learning_rate", "validation_fraction")


class ModelError(ValueError):
    pass


class DivergenceError(ModelError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    name: Optional[str] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ModelError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        unknown = set(self.hyperparameters) - set(DEFAULT_HYPERPARAMETERS[self.family])
        if unknown:
            raise ModelError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        # store the fully resolved form so equal configurations compare equal
        hp = self.resolved()
        object.__setattr__(self, "hyperparameters", hp)
        object.__setattr__(self, "name", self.name or self.family)
        for key in _COUNT_KEYS:
            if key in hp and not (isinstance(hp[key], int) and hp[key] >= 1):
                if not (key == "max_depth" and hp[key] == 0):
                    raise ModelError(f"{self.family}: {key} must be an integer >= 1")
        for key in _RATE_KEYS:
            if key in hp and not 0.0 < hp[key] <= 1.0:
                raise ModelError(f"{self.family}: {key} must lie in (0, 1]")
        if "dropout_rate" in hp and not 0.0 <= hp["dropout_rate"] < 1.0:
            raise ModelError(f"{self.family}: dropout_rate must lie in [0, 1)")
        if "C" in hp and not hp["C"] > 0:
            raise ModelError(f"{self.family}: C must be > 0")

    @property
    def label(self) -> str:
        return self.name or self.family

    def resolved(self) -> dict:
        hp = dict(DEFAULT_HYPERPARAMETERS[self.family])
        hp.update(self.hyperparameters)
        return hp

    def to_dict(self) -> dict:
        return {"family": self.family, "name": self.label, "hyperparameters": self.resolved()}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        extra = set(d) - {"family", "name", "hyperparameters"}
        if extra:
            raise ModelError(f"unknown model spec keys {sorted(extra)}")
        return cls(d["family"], dict(d.get("hyperparameters", {})), d.get("name"))


def softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def one_hot(y, n_classes: int = N_CLASSES) -> np.ndarray:
    Y = np.zeros((len(y), n_classes))
    Y[np.arange(len(y)), np.asarray(y, dtype=np.int64)] = 1.0
    return Y


class Classifier:
    """Base for every trained model: fixed input width, three-class output."""

    family = ""

    def __init__(self, n_features: int, hyperparameters: Optional[dict] = None, name: Optional[str] = None):
        self.n_features = int(n_features)
        self.n_classes = N_CLASSES
        self.hyperparameters = dict(hyperparameters or {})
        self.name = name or self.family

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ModelError(f"{self.name}: expected {self.n_features} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        return self._proba(self._check(X))

    def predict(self, X) -> np.ndarray:
        # argmax returns the first maximum, so ties go to the lowest class code
        return np.argmax(self.predict_proba(X), axis=1)

    def _proba(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def _params(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "name": self.name,
            "hyperparameters": self.hyperparameters,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "params": self._params(),
        }


def predict(model: Classifier, X) -> np.ndarray:
    return model.predict(X)


def predict_proba(model: Classifier, X) -> np.ndarray:
    return model.predict_proba(X)
