import csv
import json
from pathlib import Path

import pytest

from veinguard import __version__
from veinguard.cli import main
from veinguard.config import SEED_ENV
from veinguard.models import DEFAULT_MODELS

FAST = {
    "RandomForest": {"n_estimators": 5}, "ExtraTrees": {"n_estimators": 5}, "AdaBoost": {"n_estimators": 5},
    "GradBoost": {"n_estimators": 5}, "NewtonBoost": {"n_estimators": 5}, "LogisticRegression": {"epochs": 20},
    "LinearSVM": {"epochs": 3}, "MLP": {"epochs": 3},
}


@pytest.fixture
def fast_config(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    models = []
    for spec in DEFAULT_MODELS:
        d = spec.to_dict()
        d["hyperparameters"].update(FAST.get(spec.family, {}))
        models.append(d)
    doc = {"runs": 8, "models": models, "explain": {"n_background": 10, "n_explain": 5, "n_repeats": 1}}
    p = tmp_path / "fast.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_version(capsys):
    assert main(["version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_simulate_writes_dataset(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert main(["simulate", "--runs", "1", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "vanet-ddos-data.csv").open()))
    assert len(rows) - 1 >= 12
    err = capsys.readouterr().err
    assert "DDoS" in err and "VoIP" in err


def test_simulate_deterministic(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    main(["simulate", "--runs", "2", "--out", str(tmp_path / "a")])
    main(["simulate", "--runs", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a/vanet-ddos-data.csv").read_bytes() == (tmp_path / "b/vanet-ddos-data.csv").read_bytes()


def test_train_missing_dataset_names_path(tmp_path, capsys):
    missing = tmp_path / "nowhere.csv"
    assert main(["train", "--dataset", str(missing), "--out", str(tmp_path)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_bad_config_fails_cleanly(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"nonsense": true}')
    assert main(["simulate", "--config", str(p)]) == 1
    assert "nonsense" in capsys.readouterr().err


def test_full_pipeline_contract(tmp_path, fast_config, capsys):
    assert main(["pipeline", "--config", fast_config, "--out", str(tmp_path), "--jobs", "1"]) == 0
    run = Path(capsys.readouterr().out.strip())
    assert run.parent == tmp_path and run.name.startswith("run-")
    for name in ("config.json", "vanet-ddos-data.csv", "comparison.csv", "attribution.csv",
                 "attribution.json", "permutation_importance.csv", "class_histogram.csv"):
        assert (run / name).exists(), name
    models = [p for p in (run / "models").glob("*.json") if p.name != "preprocessing.json"]
    assert len(models) == 11
    assert len(list((run / "reports").glob("*.json"))) == 11
    rows = list(csv.DictReader((run / "comparison.csv").open()))
    assert len(rows) == 11
    assert json.loads((run / "config.json").read_text())["runs"] == 8


def test_stepwise_commands(tmp_path, fast_config, monkeypatch):
    data_dir = tmp_path / "data"
    assert main(["simulate", "--config", fast_config, "--out", str(data_dir)]) == 0
    dataset = str(data_dir / "vanet-ddos-data.csv")
    assert main(["preprocess", "--config", fast_config, "--dataset", dataset, "--out", str(tmp_path / "pre")]) == 0
    assert (tmp_path / "pre/train_matrix.csv").read_text().startswith("# standardizer:")
    assert main(["train", "--config", fast_config, "--dataset", dataset, "--families", "CART,KNN,XGBoost",
                 "--out", str(tmp_path / "tr"), "--jobs", "2"]) == 0
    trained = tmp_path / "tr/models"
    assert sorted(p.stem for p in trained.glob("*.json")) == ["DecisionTree", "KNN", "XGBoost", "preprocessing"]
    assert main(["evaluate", "--models", str(trained), "--dataset", dataset, "--out", str(tmp_path / "ev")]) == 0
    assert (tmp_path / "ev/comparison.csv").read_text() == (tmp_path / "tr/comparison.csv").read_text()
    assert main(["explain", "--config", fast_config, "--model", str(trained / "XGBoost.json"),
                 "--dataset", dataset, "--out", str(tmp_path / "ex")]) == 0
    ranking = list(csv.DictReader((tmp_path / "ex/attribution.csv").open()))
    assert len(ranking) == 5


def test_parallel_training_matches_serial(tmp_path, fast_config):
    data_dir = tmp_path / "data"
    main(["simulate", "--config", fast_config, "--out", str(data_dir)])
    dataset = str(data_dir / "vanet-ddos-data.csv")
    for jobs in ("1", "2"):
        assert main(["train", "--config", fast_config, "--dataset", dataset, "--families", "RandomForest,ANN",
                     "--out", str(tmp_path / jobs), "--jobs", jobs]) == 0
    for name in ("RandomForest.json", "ANN.json"):
        assert (tmp_path / "1/models" / name).read_bytes() == (tmp_path / "2/models" / name).read_bytes()
