"""Dense 5-32-16-8-3 network: ReLU hidden layers, dropout after the second, softmax out."""

from __future__ import annotations

import numpy as np

from .base import N_CLASSES, Classifier, DivergenceError, one_hot, softmax

HIDDEN = (32, 16, 8)
DROPOUT_AFTER = 1  # index of the hidden layer followed by dropout


def layer_sizes(n_features: int) -> list[int]:
    return [n_features, *HIDDEN, N_CLASSES]


def init_params(n_features: int, rng: np.random.Generator) -> list[np.ndarray]:
    """He-normal weights, zero biases; flat list [W1, b1, W2, b2, ...]."""
    params = []
    sizes = layer_sizes(n_features)
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        params.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def param_count(params) -> int:
    return int(sum(p.size for p in params))


def forward(params, X, dropout_mask=None, return_cache: bool = False):
    cache = [X]
    h = X
    n_layers = len(params) // 2
    for layer in range(n_layers):
        W, b = params[2 * layer], params[2 * layer + 1]
        z = h @ W + b
        if layer == n_layers - 1:
            out = softmax(z)
            break
        h = np.maximum(z, 0.0)
        if layer == DROPOUT_AFTER and dropout_mask is not None:
            h = h * dropout_mask
        cache.append(h)
    return (out, cache) if return_cache else out


def loss_grad(params, X, Y, dropout_mask=None):
    """Mean categorical cross-entropy and gradients for every parameter.

    ``dropout_mask`` (n, 16) already carries the inverted-dropout scaling.
    """
    P, cache = forward(params, X, dropout_mask, return_cache=True)
    n = X.shape[0]
    loss = -np.sum(Y * np.log(np.clip(P, 1e-300, None))) / n
    grads = [None] * len(params)
    delta = (P - Y) / n
    for layer in range(len(params) // 2 - 1, -1, -1):
        h_in = cache[layer]
        grads[2 * layer] = h_in.T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer == 0:
            break
        delta = delta @ params[2 * layer].T
        if layer - 1 == DROPOUT_AFTER and dropout_mask is not None:
            delta = delta * dropout_mask
        delta = delta * (h_in > 0.0)
    return loss, grads


class MLP(Classifier):
    """Plain mini-batch SGD with early stopping on a held-out validation split.

    The parameters of the best validation-loss epoch are restored at the end.
    """

    family = "MLP"

    def fit(self, X, y):
        hp = self.hyperparameters
        X = np.asarray(X, dtype=np.float64)
        Y = one_hot(y)
        rng = np.random.default_rng(hp["seed"])
        perm = rng.permutation(X.shape[0])
        n_val = max(1, int(round(hp["validation_fraction"] * X.shape[0])))
        val, tr = perm[:n_val], perm[n_val:]
        Xt, Yt, Xv, Yv = X[tr], Y[tr], X[val], Y[val]

        params = init_params(X.shape[1], rng)
        rate = hp["dropout_rate"]
        keep = 1.0 - rate
        lr = hp["learning_rate"]
        best, best_loss, since = [p.copy() for p in params], np.inf, 0
        self.history = {"loss": [], "val_loss": [], "accuracy": [], "val_accuracy": []}
        for _ in range(hp["epochs"]):
            order = rng.permutation(Xt.shape[0])
            epoch_loss = 0.0
            for lo in range(0, Xt.shape[0], hp["batch_size"]):
                b = order[lo:lo + hp["batch_size"]]
                mask = None
                if rate > 0.0:
                    mask = (rng.random((b.shape[0], HIDDEN[DROPOUT_AFTER])) < keep) / keep
                loss, grads = loss_grad(params, Xt[b], Yt[b], mask)
                if not np.isfinite(loss):
                    raise DivergenceError("MLP training diverged; try a smaller learning_rate")
                epoch_loss += loss * b.shape[0]
                for p, g in zip(params, grads):
                    p -= lr * g
            Pv = forward(params, Xv)
            val_loss = float(-np.sum(Yv * np.log(np.clip(Pv, 1e-300, None))) / Xv.shape[0])
            self.history["loss"].append(epoch_loss / Xt.shape[0])
            self.history["val_loss"].append(val_loss)
            self.history["accuracy"].append(float(np.mean(np.argmax(forward(params, Xt), 1) == np.argmax(Yt, 1))))
            self.history["val_accuracy"].append(float(np.mean(np.argmax(Pv, 1) == np.argmax(Yv, 1))))
            if val_loss < best_loss:
                best, best_loss, since = [p.copy() for p in params], val_loss, 0
            else:
                since += 1
                if since >= hp["patience"]:
                    break
        self.params = best
        self.best_epoch = int(np.argmin(self.history["val_loss"]))
        return self

    def _proba(self, X):
        return forward(self.params, X)

    def _params(self):
        return {"layers": [p.tolist() for p in self.params]}

    def _load(self, params):
        self.params = [np.asarray(p, dtype=np.float64) for p in params["layers"]]
