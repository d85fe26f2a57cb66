"""veinguard command line."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import dataset as ds
from .config import ConfigError, load_config
from .pipeline import (
    DATASET_NAME, StageError, apply_state, evaluate_models, explain_model, histogram_csv, prepare,
    run_pipeline, simulate, default_jobs, train_models, write_preprocessed, write_reports,
)
from .models import load_model, save_model

log = logging.getLogger("veinguard")


def _config(args):
    families = args.families.split(",") if getattr(args, "families", None) else None
    return load_config(args.config, seed=args.seed, runs=getattr(args, "runs", None), families=families)


def _out(args, cfg) -> Path:
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file or directory: {p}")
    return p


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    records = simulate(cfg)
    ds.write_csv(records, out / DATASET_NAME)
    (out / "class_histogram.csv").write_text(histogram_csv(records))
    for label, n in ds.class_histogram(records).items():
        print(f"{label:>9}: {n}", file=sys.stderr)
    return 0


def cmd_preprocess(args) -> int:
    cfg = _config(args)
    records = ds.read_csv(_require(args.dataset))
    out = _out(args, cfg)
    write_preprocessed(prepare(records, cfg), cfg, out)
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    records = ds.read_csv(_require(args.dataset))
    out = _out(args, cfg)
    prep = prepare(records, cfg)
    models = train_models(cfg.models, prep.train, args.jobs)
    mdir = out / "models"
    mdir.mkdir(exist_ok=True)
    for name, model in models.items():
        save_model(model, mdir / f"{name}.json")
    (mdir / "preprocessing.json").write_text(json.dumps(prep.state(cfg), sort_keys=True) + "\n")
    write_reports(evaluate_models(models, prep.test), out)
    return 0


def _load_models(model_dir: Path):
    models = {}
    for path in sorted(model_dir.glob("*.json")):
        if path.name == "preprocessing.json":
            continue
        m = load_model(path)
        models[m.name] = m
    state_path = model_dir / "preprocessing.json"
    if not state_path.exists():
        raise FileNotFoundError(f"{state_path} missing; train writes it next to the models")
    return models, json.loads(state_path.read_text())


def cmd_evaluate(args) -> int:
    models, state = _load_models(_require(args.models))
    test = apply_state(ds.read_csv(_require(args.dataset)), state)
    cfg = _config(args)
    reports = evaluate_models(models, test)
    write_reports(reports, _out(args, cfg))
    for name, rep in reports.items():
        print(rep.to_text(name), file=sys.stderr)
    return 0


def cmd_explain(args) -> int:
    cfg = _config(args)
    model_path = _require(args.model)
    model = load_model(model_path)
    state = json.loads(_require(model_path.parent / "preprocessing.json").read_text())
    records = ds.read_csv(_require(args.dataset))
    prep = prepare(records, cfg)
    test = apply_state(records, state)
    _, ranking = explain_model(model, prep.train, test, cfg, _out(args, cfg))
    for name, value in ranking:
        print(f"{name:>15}: {value:.6f}", file=sys.stderr)
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    out = run_pipeline(cfg, Path(args.out) if args.out else None, args.jobs)
    print(str(out))
    return 0


def cmd_version(args) -> int:
    print(f"veinguard {__version__}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="veinguard", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, runs=False, families=False):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed (overrides config and VEINGUARD_SEED)")
        if runs:
            p.add_argument("--runs", type=int, help="number of seeded simulation runs")
        if families:
            p.add_argument("--families", help="comma-separated model names or families")
            p.add_argument("--jobs", type=int, default=default_jobs(), help="parallel training workers")
        return p

    p = common(sub.add_parser("simulate", help="generate a labeled flow dataset"), runs=True)
    p.set_defaults(func=cmd_simulate)
    p = common(sub.add_parser("preprocess", help="write standardized train/test matrices"))
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_preprocess)
    p = common(sub.add_parser("train", help="train models and write reports"), families=True)
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_train)
    p = common(sub.add_parser("evaluate", help="score saved models on a dataset"))
    p.add_argument("--models", required=True, help="directory of model JSON files")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_evaluate)
    p = common(sub.add_parser("explain", help="Shapley attributions for one saved model"))
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_explain)
    p = common(sub.add_parser("pipeline", help="run every stage into a fresh run directory"), runs=True, families=True)
    p.set_defaults(func=cmd_pipeline)
    sub.add_parser("version", help="print the version").set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
