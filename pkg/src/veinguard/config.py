"""Run configuration: one JSON document drives the whole pipeline."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .flowsim import SimConfig
from .models import DEFAULT_MODELS, ModelSpec
from .preprocess import SmoteConfig

SEED_ENV = "VEINGUARD_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExplainConfig:
    model: str = "XGBoost"
    n_background: int = 100
    n_explain: int = 100
    n_repeats: int = 5


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1
    runs: int = 500
    test_fraction: float = 0.25
    simulation: SimConfig = field(default_factory=SimConfig)
    smote: SmoteConfig = field(default_factory=SmoteConfig)
    models: tuple = DEFAULT_MODELS
    explain: ExplainConfig = field(default_factory=ExplainConfig)
    output_dir: str = "runs"

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        names = [m.label for m in self.models]
        if len(set(names)) != len(names):
            raise ConfigError(f"model names must be unique: {names}")
        if self.explain.n_background < 1 or self.explain.n_explain < 1 or self.explain.n_repeats < 1:
            raise ConfigError("explain counts must be >= 1")

    @property
    def sim(self) -> SimConfig:
        """Simulation settings with the run seed applied."""
        return self.simulation.with_seed(self.seed)

    @property
    def smote_config(self) -> SmoteConfig:
        return SmoteConfig(self.smote.k_neighbors, self.smote.target, self.seed)

    def to_dict(self) -> dict:
        sim = self.simulation.to_dict()
        sim.pop("seed")
        return {
            "seed": self.seed,
            "runs": self.runs,
            "test_fraction": self.test_fraction,
            "simulation": sim,
            "smote": {"k_neighbors": self.smote.k_neighbors, "target": self.smote.target},
            "models": [m.to_dict() for m in self.models],
            "explain": {f.name: getattr(self.explain, f.name) for f in fields(ExplainConfig)},
            "output_dir": self.output_dir,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {k: d[k] for k in ("seed", "runs", "test_fraction", "output_dir") if k in d}
        try:
            if "simulation" in d:
                sim = dict(d["simulation"])
                if "seed" in sim:
                    raise ConfigError("set the seed at the top level, not under simulation")
                kw["simulation"] = SimConfig.from_dict(sim)
            if "smote" in d:
                extra = set(d["smote"]) - {"k_neighbors", "target"}
                if extra:
                    raise ConfigError(f"unknown smote keys: {sorted(extra)}")
                kw["smote"] = SmoteConfig(**d["smote"])
            if "models" in d:
                kw["models"] = tuple(ModelSpec.from_dict(m) for m in d["models"])
            if "explain" in d:
                extra = set(d["explain"]) - {f.name for f in fields(ExplainConfig)}
                if extra:
                    raise ConfigError(f"unknown explain keys: {sorted(extra)}")
                kw["explain"] = ExplainConfig(**d["explain"])
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: Optional[str] = None, seed: Optional[int] = None, runs: Optional[int] = None,
                families: Optional[list[str]] = None) -> RunConfig:
    """Read a config file (or defaults) and apply overrides.

    Seed precedence: ``--seed`` flag, then ``VEINGUARD_SEED``, then the file.
    ``families`` keeps only models whose name or family is listed.
    """
    raw = json.loads(Path(path).read_text()) if path else {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            raw["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env_seed!r} is not an integer") from None
    if seed is not None:
        raw["seed"] = seed
    if runs is not None:
        raw["runs"] = runs
    cfg = RunConfig.from_dict(raw)
    if families:
        wanted = set(families)
        chosen = tuple(m for m in cfg.models if m.label in wanted or m.family in wanted)
        missing = wanted - {m.label for m in chosen} - {m.family for m in chosen}
        if missing:
            raise ConfigError(f"unknown families {sorted(missing)}")
        cfg = RunConfig(cfg.seed, cfg.runs, cfg.test_fraction, cfg.simulation, cfg.smote, chosen,
                        cfg.explain, cfg.output_dir)
    return cfg
