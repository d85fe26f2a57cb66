"""k-nearest-neighbour vote."""

from __future__ import annotations

import numpy as np

from ..neighbors import kneighbors
from .base import N_CLASSES, Classifier, ModelError


class KNN(Classifier):
    family = "KNN"

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            raise ModelError("KNN needs a nonempty training set")
        self.X = np.ascontiguousarray(X)
        self.y = np.asarray(y, dtype=np.int64)
        return self

    def _proba(self, X):
        k = self.hyperparameters["k"]
        if k > self.X.shape[0]:
            raise ModelError(f"k={k} exceeds the {self.X.shape[0]} training rows")
        nn = kneighbors(self.X, X, k)
        votes = self.y[nn]
        out = np.zeros((X.shape[0], N_CLASSES))
        for c in range(N_CLASSES):
            out[:, c] = (votes == c).sum(axis=1)
        return out / k

    def _params(self):
        return {"X": self.X.tolist(), "y": self.y.tolist()}

    def _load(self, params):
        self.X = np.ascontiguousarray(np.asarray(params["X"], dtype=np.float64).reshape(-1, self.n_features))
        self.y = np.asarray(params["y"], dtype=np.int64)


def knn_predict(train_X, train_y, query, k: int = 5) -> np.ndarray:
    """Class distribution of the k nearest training rows for each query row."""
    model = KNN(np.shape(train_X)[1], {"k": k}).fit(train_X, train_y)
    return model.predict_proba(query)
