"""Multinomial logistic regression and one-vs-rest linear SVM."""

from __future__ import annotations

import numpy as np

from .base import N_CLASSES, Classifier, DivergenceError, one_hot, softmax


def logreg_loss_grad(W, b, X, Y):
    """Mean cross-entropy of ``softmax(X @ W + b)`` and its gradients."""
    P = softmax(X @ W + b)
    n = X.shape[0]
    loss = -np.sum(Y * np.log(np.clip(P, 1e-300, None))) / n
    D = (P - Y) / n
    return loss, X.T @ D, D.sum(axis=0)


class LogisticRegression(Classifier):
    """Full-batch gradient descent from zero weights."""

    family = "LogisticRegression"

    def fit(self, X, y):
        hp = self.hyperparameters
        X = np.asarray(X, dtype=np.float64)
        Y = one_hot(y)
        self.W = np.zeros((X.shape[1], N_CLASSES))
        self.b = np.zeros(N_CLASSES)
        step = hp["learning_rate"]
        self.loss_history = []
        for _ in range(hp["epochs"]):
            loss, gW, gb = logreg_loss_grad(self.W, self.b, X, Y)
            if not np.isfinite(loss):
                raise DivergenceError(f"logistic regression diverged (loss={loss}); try a smaller learning_rate")
            self.loss_history.append(loss)
            self.W -= step * gW
            self.b -= step * gb
        return self

    def _proba(self, X):
        return softmax(X @ self.W + self.b)

    def _params(self):
        return {"W": self.W.tolist(), "b": self.b.tolist()}

    def _load(self, params):
        self.W = np.asarray(params["W"], dtype=np.float64)
        self.b = np.asarray(params["b"], dtype=np.float64)


def hinge_objective(W, b, X, Y_pm, C):
    """Per-class ``||w||^2 / (2 C n) + mean hinge``; returns (objective, mean hinge)."""
    n = X.shape[0]
    margins = Y_pm * (X @ W + b)
    hinge = np.maximum(0.0, 1.0 - margins).mean(axis=0)
    return 0.5 * (W * W).sum(axis=0) / (C * n) + hinge, hinge


class LinearSVM(Classifier):
    """One-vs-rest L2-regularised hinge loss, seeded mini-batch subgradient descent.

    ``predict_proba`` is a softmax over the K margins, not a calibrated
    probability.
    """

    family = "LinearSVM"

    def fit(self, X, y):
        hp = self.hyperparameters
        X = np.asarray(X, dtype=np.float64)
        n, d = X.shape
        Y_pm = 2.0 * one_hot(y) - 1.0
        lam = 1.0 / (hp["C"] * n)
        bs = hp["batch_size"]
        rng = np.random.default_rng(hp["seed"])
        self.W = np.zeros((d, N_CLASSES))
        self.b = np.zeros(N_CLASSES)
        for epoch in range(hp["epochs"]):
            step = hp["learning_rate"] / np.sqrt(1.0 + epoch)
            order = rng.permutation(n)
            for lo in range(0, n, bs):
                batch = order[lo:lo + bs]
                Xb, Yb = X[batch], Y_pm[batch]
                viol = (Yb * (Xb @ self.W + self.b)) < 1.0
                coef = np.where(viol, Yb, 0.0) / len(batch)
                self.W -= step * (lam * self.W - Xb.T @ coef)
                self.b -= step * (-coef.sum(axis=0))
            if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
                raise DivergenceError("linear SVM diverged; try a smaller learning_rate")
        return self

    def decision_function(self, X):
        return self._check(X) @ self.W + self.b

    def training_hinge(self, X, y) -> np.ndarray:
        return hinge_objective(self.W, self.b, np.asarray(X, dtype=np.float64), 2.0 * one_hot(y) - 1.0,
                               self.hyperparameters["C"])[1]

    def _proba(self, X):
        return softmax(X @ self.W + self.b)

    def _params(self):
        return {"W": self.W.tolist(), "b": self.b.tolist()}

    def _load(self, params):
        self.W = np.asarray(params["W"], dtype=np.float64)
        self.b = np.asarray(params["b"], dtype=np.float64)
