"""From flow records to model-ready matrices."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .dataset import FlowRecord, Protocol, SchemaError, TrafficLabel
from .neighbors import kneighbors

FEATURES: tuple[str, ...] = ("Protocol", "ThroughputKbps", "MeanDelay", "RxPackets", "FlowDuration")
N_CLASSES = len(TrafficLabel)


class SplitError(ValueError):
    pass


class SmoteError(ValueError):
    pass


@dataclass
class LabeledSet:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple = FEATURES

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.size == 0:
            self.X = self.X.reshape(0, len(self.feature_names))
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"X shape {self.X.shape} does not match {self.y.shape[0]} labels")
        if self.X.shape[1] != len(self.feature_names):
            raise ValueError("one feature name per column required")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")

    def __len__(self):
        return self.y.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "LabeledSet":
        return LabeledSet(self.X[idx], self.y[idx], self.feature_names)

    def class_counts(self, n_classes: int = N_CLASSES) -> np.ndarray:
        return np.bincount(self.y, minlength=n_classes)


def encode_protocol(p) -> float:
    return 0.0 if Protocol(p) is Protocol.TCP else 1.0


def select_features(records: Sequence[FlowRecord]) -> LabeledSet:
    """Keep protocol, throughput, mean delay, received packets and duration."""
    X = np.empty((len(records), len(FEATURES)))
    y = np.empty(len(records), dtype=np.int64)
    for i, rec in enumerate(records):
        try:
            X[i] = (
                encode_protocol(rec.Protocol),
                rec.ThroughputKbps,
                rec.MeanDelay,
                rec.RxPackets,
                rec.FlowDuration,
            )
        except AttributeError as exc:
            raise SchemaError(f"record {i} lacks a required column: {exc}") from exc
        y[i] = int(TrafficLabel(rec.TrafficLabel))
    return LabeledSet(X, y, FEATURES)


def derive_snr(record) -> float:
    """Mean SNR in dB: mean signal minus mean noise, both in dBm."""
    return float(record.AvgSignal_dBm) - float(record.AvgNoise_dBm)


def snr_column(records: Sequence[FlowRecord], fill: Optional[float] = None) -> np.ndarray:
    """SNR for every record; non-finite values are replaced by the median."""
    snr = np.array([derive_snr(r) for r in records], dtype=np.float64)
    bad = ~np.isfinite(snr)
    if bad.any():
        if fill is None:
            fill = float(np.median(snr[~bad])) if (~bad).any() else 0.0
        snr[bad] = fill
    return snr


@dataclass
class Imputer:
    """Replaces non-finite values with per-column medians of the fitting data."""

    medians: np.ndarray

    @classmethod
    def fit(cls, data: LabeledSet) -> "Imputer":
        med = np.zeros(data.n_features)
        for j in range(data.n_features):
            col = data.X[:, j]
            ok = np.isfinite(col)
            med[j] = np.median(col[ok]) if ok.any() else 0.0
        return cls(med)

    def transform(self, data: LabeledSet) -> LabeledSet:
        X = data.X.copy()
        bad = ~np.isfinite(X)
        if bad.any():
            X[bad] = np.broadcast_to(self.medians, X.shape)[bad]
        return LabeledSet(X, data.y, data.feature_names)


@dataclass
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, data: LabeledSet) -> LabeledSet:
        return LabeledSet((data.X - self.means) / self.stds, data.y, data.feature_names)

    def transform_array(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.means) / self.stds

    def inverse_transform(self, data: LabeledSet) -> LabeledSet:
        return LabeledSet(data.X * self.stds + self.means, data.y, data.feature_names)

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["means"], dtype=np.float64), np.asarray(d["stds"], dtype=np.float64))


def fit_standardizer(train: LabeledSet) -> Standardizer:
    """Column means and population standard deviations of the training split.

    A zero-variance column gets std 1 (so it maps to all zeros) and a warning.
    """
    means = train.X.mean(axis=0)
    stds = train.X.std(axis=0)
    # a constant column can still show a tiny std from rounding in the mean
    flat = ~(stds > 0) | (np.ptp(train.X, axis=0) == 0) if len(train) else ~(stds > 0)
    if flat.any():
        names = [n for n, f in zip(train.feature_names, flat) if f]
        warnings.warn(f"zero-variance columns {names}: std set to 1", RuntimeWarning, stacklevel=2)
        stds = np.where(flat, 1.0, stds)
    return Standardizer(means, stds)


def transform(s: Standardizer, data: LabeledSet) -> LabeledSet:
    return s.transform(data)


def split_counts(class_counts, test_fraction: float) -> np.ndarray:
    """Per-class test sizes by largest remainder.

    The total is ``round(n * test_fraction)`` (halves round up); leftover units
    go to the largest fractional remainders, lower class code first on ties.
    """
    counts = np.asarray(class_counts, dtype=np.int64)
    quota = counts * test_fraction
    base = np.floor(quota).astype(np.int64)
    total = int(math.floor(counts.sum() * test_fraction + 0.5))
    rem = quota - base
    order = sorted(range(len(counts)), key=lambda c: (-rem[c], c))
    for c in order[: max(0, total - int(base.sum()))]:
        base[c] += 1
    return base


def stratified_split_indices(y, test_fraction: float = 0.25, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.int64)
    if not 0.0 < test_fraction < 1.0:
        raise SplitError("test_fraction must lie in (0, 1)")
    classes, counts = np.unique(y, return_counts=True)
    if np.any(counts < 2):
        raise SplitError(f"classes {classes[counts < 2].tolist()} have fewer than 2 samples")
    n_test = split_counts(counts, test_fraction)
    rng = np.random.default_rng(seed)
    test = []
    for c, k in zip(classes, n_test):
        members = np.nonzero(y == c)[0]
        test.append(rng.permutation(members)[:k])
    test_idx = np.sort(np.concatenate(test)) if test else np.empty(0, dtype=np.int64)
    mask = np.ones(y.shape[0], dtype=bool)
    mask[test_idx] = False
    return np.nonzero(mask)[0], test_idx


def stratified_split(data: LabeledSet, test_fraction: float = 0.25, seed: int = 0) -> tuple[LabeledSet, LabeledSet]:
    train_idx, test_idx = stratified_split_indices(data.y, test_fraction, seed)
    return data.subset(train_idx), data.subset(test_idx)


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target: Union[str, dict] = "match-majority"
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise SmoteError("k_neighbors must be >= 1")
        if not (self.target == "match-majority" or isinstance(self.target, dict)):
            raise SmoteError("target must be 'match-majority' or a per-class count map")


@dataclass
class SmoteResult:
    data: LabeledSet
    # for each synthetic row: (base row, neighbour row) in the input set
    parents: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))
    gaps: np.ndarray = field(default_factory=lambda: np.empty(0))


def smote_with_provenance(train: LabeledSet, cfg: SmoteConfig = SmoteConfig()) -> SmoteResult:
    counts = train.class_counts()
    present = np.nonzero(counts)[0]
    if cfg.target == "match-majority":
        targets = {int(c): int(counts.max()) for c in present}
    else:
        targets = {int(c): int(v) for c, v in cfg.target.items()}
    rng = np.random.default_rng(cfg.seed)

    new_X, parents, gaps, new_y = [], [], [], []
    for c in sorted(targets):
        need = targets[c] - int(counts[c]) if c < len(counts) else targets[c]
        if need <= 0:
            continue
        members = np.nonzero(train.y == c)[0]
        if members.shape[0] < 2:
            raise SmoteError(f"class {c} has {members.shape[0]} samples; SMOTE needs at least 2")
        k = min(cfg.k_neighbors, members.shape[0] - 1)
        Xc = train.X[members]
        nn = kneighbors(Xc, Xc, k, exclude_self=True)
        base = rng.integers(0, members.shape[0], size=need)
        pick = nn[base, rng.integers(0, k, size=need)]
        u = rng.random(need)
        new_X.append(Xc[base] + u[:, None] * (Xc[pick] - Xc[base]))
        parents.append(np.column_stack((members[base], members[pick])))
        gaps.append(u)
        new_y.append(np.full(need, c, dtype=np.int64))
    if not new_X:
        return SmoteResult(LabeledSet(train.X.copy(), train.y.copy(), train.feature_names))
    X = np.vstack([train.X] + new_X)
    y = np.concatenate([train.y] + new_y)
    return SmoteResult(LabeledSet(X, y, train.feature_names), np.vstack(parents), np.concatenate(gaps))


def smote(train: LabeledSet, cfg: SmoteConfig = SmoteConfig()) -> LabeledSet:
    """Oversample minority classes up to the target count.

    Each synthetic row is ``x + u * (x_nn - x)`` with ``x`` a random class
    member, ``x_nn`` one of its ``k`` nearest same-class neighbours and
    ``u ~ U(0, 1)``. Original rows come first, unchanged.
    """
    return smote_with_provenance(train, cfg).data


def write_matrix_csv(data: LabeledSet, path, standardizer: Optional[Standardizer] = None) -> Path:
    """Matrix dump with an optional standardizer comment line on top."""
    path = Path(path)
    with path.open("w") as fh:
        if standardizer is not None:
            means = ";".join(format(v, ".17g") for v in standardizer.means)
            stds = ";".join(format(v, ".17g") for v in standardizer.stds)
            fh.write(f"# standardizer: means={means}, stds={stds}\n")
        fh.write(",".join(data.feature_names + ("label",)) + "\n")
        for row, label in zip(data.X, data.y):
            fh.write(",".join(format(v, ".17g") for v in row) + f",{int(label)}\n")
    return path


def read_matrix_csv(path) -> tuple[LabeledSet, Optional[Standardizer]]:
    lines = Path(path).read_text().splitlines()
    std = None
    if lines and lines[0].startswith("# standardizer:"):
        body = lines.pop(0)[len("# standardizer:"):].strip()
        m_part, s_part = body.split(", stds=")
        means = [float(v) for v in m_part.split("=", 1)[1].split(";")]
        stds = [float(v) for v in s_part.split(";")]
        std = Standardizer(np.array(means), np.array(stds))
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:] if line]
    X = np.array([[float(v) for v in r[:-1]] for r in rows]).reshape(len(rows), len(header) - 1)
    y = np.array([int(r[-1]) for r in rows], dtype=np.int64)
    return LabeledSet(X, y, tuple(header[:-1])), std
