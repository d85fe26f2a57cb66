"""Confusion matrices and per-class precision / recall / F1 reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import TrafficLabel

N_CLASSES = 3
CLASS_NAMES = tuple(label.name for label in TrafficLabel)


def confusion(y_true, y_pred, n_classes: int = N_CLASSES) -> np.ndarray:
    """Counts with rows = true class and columns = predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.int64).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape[0]} true vs {y_pred.shape[0]} predicted")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"{name} contains codes outside 0..{n_classes - 1}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _ratio(num, den):
    return np.divide(num, den, out=np.zeros(np.shape(num), dtype=np.float64), where=np.asarray(den) > 0)


@dataclass
class ClassReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    confusion: np.ndarray

    @property
    def macro(self) -> dict:
        return {"precision": float(self.precision.mean()), "recall": float(self.recall.mean()),
                "f1": float(self.f1.mean())}

    @property
    def weighted(self) -> dict:
        total = self.support.sum()
        w = self.support / total if total else np.zeros_like(self.precision)
        return {"precision": float(w @ self.precision), "recall": float(w @ self.recall), "f1": float(w @ self.f1)}

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())

    def to_dict(self) -> dict:
        return {
            "classes": {
                name: {"precision": float(p), "recall": float(r), "f1": float(f), "support": int(s)}
                for name, p, r, f, s in zip(CLASS_NAMES, self.precision, self.recall, self.f1, self.support)
            },
            "accuracy": float(self.accuracy),
            "macro": self.macro,
            "weighted": self.weighted,
            "confusion": self.confusion.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self, title: str = "") -> str:
        lines = [title] if title else []
        lines.append(f"{'Class':<10}{'Precision':>10}{'Recall':>10}{'F1-score':>10}{'Accuracy':>10}{'Support':>9}")
        for name, p, r, f, s in zip(CLASS_NAMES, self.precision, self.recall, self.f1, self.support):
            lines.append(f"{name:<10}{p:>10.2f}{r:>10.2f}{f:>10.2f}{'-':>10}{int(s):>9}")
        w = self.weighted
        lines.append(f"{'Overall':<10}{w['precision']:>10.2f}{w['recall']:>10.2f}{w['f1']:>10.2f}"
                     f"{self.accuracy:>10.2f}{int(self.support.sum()):>9}")
        return "\n".join(lines)


def report(cm) -> ClassReport:
    """Per-class metrics from a confusion matrix; any 0/0 ratio is reported as 0."""
    cm = np.asarray(cm, dtype=np.int64)
    if cm.sum() <= 0:
        raise ValueError("confusion matrix is empty")
    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    actual = cm.sum(axis=1).astype(np.float64)
    precision = _ratio(tp, predicted)
    recall = _ratio(tp, actual)
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    return ClassReport(precision, recall, f1, cm.sum(axis=1), float(np.trace(cm) / cm.sum()), cm.copy())


def evaluate(y_true, y_pred) -> ClassReport:
    return report(confusion(y_true, y_pred))


def compare_f1(reports: Mapping[str, ClassReport]) -> list[tuple[str, float, float]]:
    """(name, macro-F1, accuracy) sorted by macro-F1 descending, then name."""
    if not reports:
        raise ValueError("nothing to compare")
    rows = [(name, r.macro_f1, r.accuracy) for name, r in reports.items()]
    return sorted(rows, key=lambda row: (-row[1], row[0]))


def comparison_csv(ranked: Sequence[tuple[str, float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["family", "macro_f1", "accuracy"])
    for name, f1, acc in ranked:
        writer.writerow([name, format(f1, ".17g"), format(acc, ".17g")])
    return buf.getvalue()


def comparison_table(ranked: Sequence[tuple[str, float, float]]) -> str:
    width = max(len(r[0]) for r in ranked)
    lines = [f"{'model':<{width}}  macro_f1  accuracy"]
    lines += [f"{name:<{width}}  {f1:8.4f}  {acc:8.4f}" for name, f1, acc in ranked]
    return "\n".join(lines)


def write_comparison(ranked, path) -> Path:
    path = Path(path)
    path.write_text(comparison_csv(ranked))
    return path
