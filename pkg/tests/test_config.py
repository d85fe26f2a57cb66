import json

import pytest

from veinguard.config import SEED_ENV, ConfigError, RunConfig, load_config
from veinguard.flowsim import SyntheticMobility


def write(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_defaults_round_trip():
    cfg = RunConfig()
    assert RunConfig.from_dict(json.loads(cfg.to_json())) == cfg
    assert cfg.sim.seed == cfg.seed
    assert len(cfg.models) == 11


def test_mobility_round_trip():
    cfg = RunConfig.from_dict({"simulation": {"mobility": {"kind": "synthetic", "lane_positions_m": [[0, 0]] * 13,
                                                           "speed_mps": 20.0}}})
    assert isinstance(cfg.simulation.mobility, SyntheticMobility)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("doc", [
    {"bogus": 1},
    {"simulation": {"warp": 9}},
    {"simulation": {"seed": 3}},
    {"smote": {"k": 3}},
    {"explain": {"model": "X", "extra": 1}},
    {"models": [{"family": "CART", "colour": "red"}]},
    {"models": [{"family": "CART", "name": "a"}, {"family": "KNN", "name": "a"}]},
    {"runs": 0},
    {"test_fraction": 1.5},
    {"simulation": {"duration_s": -1}},
    {"simulation": {"mobility": {"kind": "teleport"}}},
])
def test_invalid_documents_rejected(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_seed_precedence(tmp_path, monkeypatch):
    path = write(tmp_path, {"seed": 5})
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert load_config(path).seed == 5
    monkeypatch.setenv(SEED_ENV, "11")
    assert load_config(path).seed == 11
    assert load_config(path, seed=2).seed == 2
    monkeypatch.setenv(SEED_ENV, "eleven")
    with pytest.raises(ConfigError):
        load_config(path)


def test_family_filter(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    cfg = load_config(None, families=["NewtonBoost", "KNN"])
    assert [m.label for m in cfg.models] == ["XGBoost", "CatBoost", "KNN"]
    with pytest.raises(ConfigError):
        load_config(None, families=["Prophet"])


def test_runs_override(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert load_config(None, runs=7).runs == 7
