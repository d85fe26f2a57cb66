"""Exact Shapley attributions and permutation importance."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import factorial
from typing import Callable, Optional, Sequence

import numpy as np

from .metrics import evaluate

MAX_EXACT_FEATURES = 20


class TooManyFeatures(ValueError):
    pass


def coalition_weights(d: int, exact: bool = False):
    """Weight of a coalition of size s not containing the player: s!(d-s-1)!/d!."""
    if exact:
        return [Fraction(factorial(s) * factorial(d - s - 1), factorial(d)) for s in range(d)]
    return np.array([factorial(s) * factorial(d - s - 1) / factorial(d) for s in range(d)])


def shapley_from_values(v: Sequence, d: int, exact: bool = False):
    """Shapley values from a table of coalition worths indexed by bitmask.

    ``v[mask]`` is the worth of the coalition whose members are the set bits
    of ``mask``. With ``exact=True`` the arithmetic is done in rationals.
    Summation order is fixed by coalition index.
    """
    weights = coalition_weights(d, exact)
    popcount = [bin(mask).count("1") for mask in range(1 << d)]
    out = []
    for i in range(d):
        bit = 1 << i
        acc = Fraction(0) if exact else 0.0
        for mask in range(1 << d):
            if mask & bit:
                continue
            acc += weights[popcount[mask]] * (v[mask | bit] - v[mask])
        out.append(acc)
    return out if exact else np.array(out)


def shapley_by_orderings(v: Sequence, d: int):
    """Average marginal contribution over all d! orderings, in rationals."""
    phi = [Fraction(0)] * d
    count = 0
    for order in permutations(range(d)):
        mask = 0
        for i in order:
            phi[i] += Fraction(v[mask | (1 << i)]) - Fraction(v[mask])
            mask |= 1 << i
        count += 1
    return [p / count for p in phi]


def coalition_values(score: Callable[[np.ndarray], np.ndarray], background: np.ndarray, instance: np.ndarray):
    """Worth of every coalition: mean score over background rows with the
    coalition's features taken from ``instance``."""
    background = np.asarray(background, dtype=np.float64)
    instance = np.asarray(instance, dtype=np.float64)
    n_bg, d = background.shape
    masks = np.arange(1 << d)
    member = ((masks[:, None] >> np.arange(d)) & 1).astype(bool)
    hybrid = np.where(member[:, None, :], instance[None, None, :], background[None, :, :])
    scores = np.asarray(score(hybrid.reshape(-1, d)), dtype=np.float64).reshape(1 << d, n_bg)
    return scores.mean(axis=1)


@dataclass
class ShapResult:
    phi: np.ndarray
    base_value: float
    outputs: np.ndarray
    feature_names: tuple
    targets: np.ndarray
    row_base_values: Optional[np.ndarray] = None

    def to_json(self) -> str:
        rows = [
            {"target_class": int(t), "base_value": float(b), "output": float(o),
             "phi": dict(zip(self.feature_names, map(float, p)))}
            for p, o, t, b in zip(self.phi, self.outputs, self.targets, self.row_base_values)
        ]
        return json.dumps({"base_value": self.base_value, "feature_names": list(self.feature_names),
                           "instances": rows}, indent=1)


def _check_width(d: int):
    if d > MAX_EXACT_FEATURES:
        raise TooManyFeatures(
            f"exact enumeration over {d} features needs 2^{d} coalitions; use permutation_importance instead"
        )


def exact_shapley(model, background, instance, target: Optional[int] = None) -> tuple[np.ndarray, float, float]:
    """Attribution of the predicted-class probability for one row.

    Returns ``(phi, base_value, output)``; ``phi.sum() + base_value`` equals
    ``output`` up to rounding.
    """
    instance = np.asarray(instance, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    d = instance.shape[0]
    _check_width(d)
    if background.shape[0] == 0:
        raise ValueError("background set is empty")
    if target is None:
        target = int(model.predict(instance[None, :])[0])
    v = coalition_values(lambda Z: model.predict_proba(Z)[:, target], background, instance)
    phi = shapley_from_values(v, d)
    return phi, float(v[0]), float(v[-1])


def explain_rows(model, background, X, feature_names) -> ShapResult:
    X = np.asarray(X, dtype=np.float64)
    _check_width(X.shape[1])
    targets = model.predict(X)
    phis, bases, outs = [], [], []
    for row, t in zip(X, targets):
        phi, base, out = exact_shapley(model, background, row, int(t))
        phis.append(phi)
        bases.append(base)
        outs.append(out)
    # the base value depends on the target class; report the mean over rows
    phi = np.vstack(phis) if phis else np.empty((0, X.shape[1]))
    return ShapResult(phi, float(np.mean(bases)) if bases else 0.0, np.array(outs), tuple(feature_names),
                      targets, np.array(bases))


def rank_features(result: ShapResult) -> list[tuple[str, float]]:
    """Features by descending mean |phi|; the sort is stable so ties keep input order."""
    if result.phi.shape[0] == 0:
        raise ValueError("empty attribution result")
    mean_abs = np.abs(result.phi).mean(axis=0)
    order = sorted(range(len(mean_abs)), key=lambda j: -mean_abs[j])
    return [(result.feature_names[j], float(mean_abs[j])) for j in order]


def ranking_csv(ranking) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["feature", "mean_abs_shap"])
    for name, value in ranking:
        writer.writerow([name, format(value, ".17g")])
    return buf.getvalue()


@dataclass
class PermutationImportance:
    feature_names: tuple
    mean: np.ndarray
    std: np.ndarray
    baseline: float
    drops: np.ndarray


def permutation_importance(model, X, y, n_repeats: int = 5, seed: int = 0, feature_names=None) -> PermutationImportance:
    """Macro-F1 lost when one column at a time is shuffled."""
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    baseline = evaluate(y, model.predict(X)).macro_f1
    rng = np.random.default_rng(seed)
    drops = np.zeros((X.shape[1], n_repeats))
    for j in range(X.shape[1]):
        for r in range(n_repeats):
            Xp = X.copy()
            Xp[:, j] = X[rng.permutation(X.shape[0]), j]
            drops[j, r] = baseline - evaluate(y, model.predict(Xp)).macro_f1
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{j}" for j in range(X.shape[1]))
    return PermutationImportance(names, drops.mean(axis=1), drops.std(axis=1), baseline, drops)
