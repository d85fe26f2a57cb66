"""End-to-end stages shared by the CLI subcommands."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dataset as ds
from .config import RunConfig
from .explain import explain_rows, permutation_importance, rank_features, ranking_csv
from .flowsim import run_many
from .metrics import ClassReport, compare_f1, comparison_csv, comparison_table, evaluate
from .models import Classifier, ModelSpec, fit_model, save_model
from .preprocess import (
    Imputer, LabeledSet, Standardizer, fit_standardizer, select_features, smote, snr_column,
    stratified_split_indices, write_matrix_csv,
)

log = logging.getLogger("veinguard")

DATASET_NAME = "vanet-ddos-data.csv"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class _stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("[%s] start", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        log.info("[%s] done", self.name)
        return False


def _csv_rows(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format(v, ".17g") if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def simulate(cfg: RunConfig) -> list[ds.FlowRecord]:
    return run_many(cfg.sim, cfg.runs)


def histogram_csv(records) -> str:
    hist = ds.class_histogram(records)
    return _csv_rows(["label", "flows"], hist.items())


@dataclass
class Prepared:
    train: LabeledSet
    test: LabeledSet
    train_raw: LabeledSet
    standardizer: Standardizer
    imputer: Imputer
    n_duplicates: int
    snr_by_class: dict

    def state(self, cfg: RunConfig) -> dict:
        return {
            "seed": cfg.seed,
            "test_fraction": cfg.test_fraction,
            "standardizer": self.standardizer.to_dict(),
            "imputer_medians": self.imputer.medians.tolist(),
            "feature_names": list(self.train.feature_names),
        }


def prepare(records: Sequence[ds.FlowRecord], cfg: RunConfig) -> Prepared:
    """Dedup, select, split, impute, standardize, then SMOTE the training split only."""
    unique = ds.dedup(records)
    data = select_features(unique)
    snr = snr_column(unique)
    snr_by_class = {
        ds.TrafficLabel(c).name: float(snr[data.y == c].mean()) if np.any(data.y == c) else float("nan")
        for c in range(3)
    }
    train_idx, test_idx = stratified_split_indices(data.y, cfg.test_fraction, cfg.seed)
    train, test = data.subset(train_idx), data.subset(test_idx)
    imputer = Imputer.fit(train)
    train, test = imputer.transform(train), imputer.transform(test)
    std = fit_standardizer(train)
    train_std, test_std = std.transform(train), std.transform(test)
    balanced = smote(train_std, cfg.smote_config)
    return Prepared(balanced, test_std, train_std, std, imputer, len(records) - len(unique), snr_by_class)


def apply_state(records: Sequence[ds.FlowRecord], state: dict) -> LabeledSet:
    """Rebuild the standardized test split saved alongside trained models."""
    data = select_features(ds.dedup(records))
    _, test_idx = stratified_split_indices(data.y, state["test_fraction"], state["seed"])
    imputer = Imputer(np.asarray(state["imputer_medians"], dtype=np.float64))
    std = Standardizer.from_dict(state["standardizer"])
    return std.transform(imputer.transform(data.subset(test_idx)))


def _fit_one(args):
    spec, X, y = args
    return fit_model(spec, X, y)


def train_models(specs: Sequence[ModelSpec], train: LabeledSet, jobs: int = 1) -> dict[str, Classifier]:
    """Fit every spec; results are keyed and ordered as the specs were given."""
    work = [(spec, train.X, train.y) for spec in specs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fitted = list(pool.map(_fit_one, work))
    else:
        fitted = [_fit_one(w) for w in work]
    return {spec.label: model for spec, model in zip(specs, fitted)}


def evaluate_models(models: dict[str, Classifier], test: LabeledSet) -> dict[str, ClassReport]:
    return {name: evaluate(test.y, model.predict(test.X)) for name, model in models.items()}


def write_reports(reports: dict[str, ClassReport], out: Path) -> None:
    rdir = out / "reports"
    rdir.mkdir(parents=True, exist_ok=True)
    for name, rep in reports.items():
        (rdir / f"{name}.json").write_text(rep.to_json() + "\n")
        (rdir / f"{name}.txt").write_text(rep.to_text(name) + "\n")
    ranked = compare_f1(reports)
    (out / "comparison.csv").write_text(comparison_csv(ranked))
    log.info("F1 comparison:\n%s", comparison_table(ranked))


def explain_model(model: Classifier, background_pool: LabeledSet, test: LabeledSet, cfg: RunConfig, out: Path):
    rng = np.random.default_rng(cfg.seed)
    bg = background_pool.X[rng.choice(len(background_pool), size=min(cfg.explain.n_background, len(background_pool)),
                                      replace=False)]
    rows = test.X[rng.choice(len(test), size=min(cfg.explain.n_explain, len(test)), replace=False)]
    result = explain_rows(model, bg, rows, test.feature_names)
    ranking = rank_features(result)
    (out / "attribution.csv").write_text(ranking_csv(ranking))
    (out / "attribution.json").write_text(result.to_json() + "\n")
    perm = permutation_importance(model, test.X, test.y, cfg.explain.n_repeats, cfg.seed, test.feature_names)
    (out / "permutation_importance.csv").write_text(
        _csv_rows(["feature", "mean_f1_drop", "std_f1_drop"], zip(perm.feature_names, perm.mean.tolist(), perm.std.tolist()))
    )
    return result, ranking


def new_run_dir(base: Path) -> Path:
    stamp = datetime.now().strftime("run-%Y%m%dT%H%M%S")
    path = base / stamp
    i = 1
    while path.exists():
        path = base / f"{stamp}-{i}"
        i += 1
    path.mkdir(parents=True)
    return path


def run_pipeline(cfg: RunConfig, out_base: Optional[Path] = None, jobs: int = 1) -> Path:
    """simulate -> dedup/select -> split -> standardize -> SMOTE -> train -> evaluate -> compare -> explain."""
    out = new_run_dir(Path(out_base or cfg.output_dir))
    (out / "config.json").write_text(cfg.to_json() + "\n")

    with _stage("simulate"):
        records = simulate(cfg)
        ds.write_csv(records, out / DATASET_NAME)
        (out / "class_histogram.csv").write_text(histogram_csv(records))
    with _stage("preprocess"):
        prep = prepare(records, cfg)
        write_preprocessed(prep, cfg, out)
    with _stage("train"):
        models = train_models(cfg.models, prep.train, jobs)
        mdir = out / "models"
        mdir.mkdir(exist_ok=True)
        for name, model in models.items():
            save_model(model, mdir / f"{name}.json")
        (mdir / "preprocessing.json").write_text(json.dumps(prep.state(cfg), sort_keys=True) + "\n")
    with _stage("evaluate"):
        reports = evaluate_models(models, prep.test)
        write_reports(reports, out)
    with _stage("explain"):
        target = cfg.explain.model if cfg.explain.model in models else compare_f1(reports)[0][0]
        explain_model(models[target], prep.train, prep.test, cfg, out)
    return out


def write_preprocessed(prep: Prepared, cfg: RunConfig, out: Path) -> None:
    write_matrix_csv(prep.train, out / "train_matrix.csv", prep.standardizer)
    write_matrix_csv(prep.test, out / "test_matrix.csv", prep.standardizer)
    (out / "snr_by_class.csv").write_text(_csv_rows(["label", "mean_snr_db"], prep.snr_by_class.items()))
    (out / "preprocess_summary.json").write_text(json.dumps({
        "duplicates_removed": prep.n_duplicates,
        "train_counts_before_smote": prep.train_raw.class_counts().tolist(),
        "train_counts_after_smote": prep.train.class_counts().tolist(),
        "test_counts": prep.test.class_counts().tolist(),
    }, indent=2, sort_keys=True) + "\n")


def default_jobs() -> int:
    return os.cpu_count() or 1
