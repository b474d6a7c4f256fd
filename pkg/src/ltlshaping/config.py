"""Experiment configuration files (YAML)."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .rewards import RewardKind

AUTO = "auto"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EnvSpec:
    name: str = "example"
    variant: str = "deterministic"
    noise: float | None = None
    horizon: int | None = None
    map: str | None = None
    enumerable: bool = True


@dataclass(frozen=True)
class RewardSpec:
    kind: str = "adaptive_hybrid"
    eta0: float = 0.1
    theta: float | str = AUTO  # "auto" = sum of round-0 progression values


@dataclass(frozen=True)
class ScheduleSpec:
    interval: int | str = AUTO  # "auto" = budget / |partition|
    threshold: float = 0.95
    eval_episodes: int = 20


@dataclass(frozen=True)
class LearnerSpec:
    alpha: float = 0.1
    epsilon: float = 0.1
    epsilon_final: float | None = None
    gamma: float = 0.9
    budget: int = 1000
    trials: int = 10
    seed: int = 0
    reset_on_round: bool = False
    eval_every: int = 100
    eval_episodes: int = 5
    final_eval_episodes: int = 20


@dataclass(frozen=True)
class OracleSpec:
    kinds: tuple[str, ...] = ("adaptive_progression", "adaptive_hybrid")
    theta: float = 100.0
    eta0: float = 0.1
    margin: int | None = None
    examples: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    formula: str | None = None
    ap: tuple[str, ...] | None = None
    automaton: str | None = None  # DFA JSON file, or "fixture"
    env: EnvSpec = field(default_factory=EnvSpec)
    reward: RewardSpec = field(default_factory=RewardSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    oracle: OracleSpec = field(default_factory=OracleSpec)
    output: str = "runs"
    sweep: dict = field(default_factory=dict)
    base_dir: str = "."

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()

    def resolve(self, path: str | None) -> str | None:
        if path is None or path == "fixture":
            return path
        p = Path(path)
        if not p.is_absolute():
            cand = Path(self.base_dir) / p
            if cand.exists() or not p.exists():
                p = cand
        return str(p)


_SECTIONS = {"env": EnvSpec, "reward": RewardSpec, "schedule": ScheduleSpec, "learner": LearnerSpec, "oracle": OracleSpec}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in {where!r}: {', '.join(sorted(unknown))}")
    data = dict(data)
    for k, v in data.items():
        if isinstance(v, list):
            data[k] = tuple(v)
    return cls(**data)


def from_dict(data: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    data = copy.deepcopy(data)
    top = {f.name for f in fields(ExperimentConfig)} - {"base_dir"}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    kwargs: dict[str, Any] = {"base_dir": str(base_dir)}
    for k, v in data.items():
        if k in _SECTIONS:
            kwargs[k] = _build(_SECTIONS[k], v or {}, k)
        elif k == "ap" and v is not None:
            kwargs[k] = tuple(v.split() if isinstance(v, str) else v)
        else:
            kwargs[k] = v
    cfg = ExperimentConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.formula is None and cfg.automaton is None:
        raise ConfigError("config needs a 'formula' or an 'automaton'")
    if cfg.formula is not None and cfg.ap is None and cfg.automaton is None:
        raise ConfigError("a formula needs an explicit 'ap' list")
    if cfg.automaton not in (None, "fixture") and not Path(cfg.resolve(cfg.automaton)).exists():
        raise ConfigError(f"automaton file not found: {cfg.automaton}")
    if cfg.env.map is not None and not _map_exists(cfg):
        raise ConfigError(f"map file not found: {cfg.env.map}")
    try:
        RewardKind(cfg.reward.kind)
    except ValueError:
        raise ConfigError(f"unknown reward kind {cfg.reward.kind!r}; choose from {[k.value for k in RewardKind]}") from None
    for k in cfg.oracle.kinds:
        if k not in ("adaptive_progression", "adaptive_hybrid"):
            raise ConfigError(f"oracle kinds must be adaptive, got {k!r}")
    if cfg.reward.theta != AUTO and not (isinstance(cfg.reward.theta, (int, float)) and cfg.reward.theta > 1):
        raise ConfigError("reward.theta must be 'auto' or a number above 1")
    if not 0 <= cfg.reward.eta0 <= 1:
        raise ConfigError("reward.eta0 must lie in [0, 1]")
    if cfg.schedule.interval != AUTO and not (isinstance(cfg.schedule.interval, int) and cfg.schedule.interval >= 1):
        raise ConfigError("schedule.interval must be 'auto' or a positive integer")
    if not 0 <= cfg.schedule.threshold <= 1:
        raise ConfigError("schedule.threshold must lie in [0, 1]")
    if cfg.schedule.eval_episodes < 1:
        raise ConfigError("schedule.eval_episodes must be at least 1")
    ln = cfg.learner
    if not 0 < ln.gamma <= 1:
        raise ConfigError("learner.gamma must lie in (0, 1]")
    if ln.trials < 1:
        raise ConfigError("learner.trials must be at least 1")
    if ln.budget < 0:
        raise ConfigError("learner.budget must be non-negative")
    if not 0 < ln.alpha <= 1 or not 0 <= ln.epsilon <= 1:
        raise ConfigError("learner.alpha must lie in (0, 1] and learner.epsilon in [0, 1]")
    if ln.final_eval_episodes < 1 or ln.eval_episodes < 1 or ln.eval_every < 0:
        raise ConfigError("evaluation episode counts must be positive")
    for key, values in cfg.sweep.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep entry {key!r} must be a non-empty list")
        section, _, name = key.partition(".")
        if section not in _SECTIONS or name not in {f.name for f in fields(_SECTIONS[section])}:
            raise ConfigError(f"sweep key {key!r} does not name a config field")


def _map_exists(cfg: ExperimentConfig) -> bool:
    from .envs import EnvError, load_map

    if Path(cfg.resolve(cfg.env.map)).exists():
        return True
    try:
        load_map(cfg.env.map)
    except EnvError:
        return False
    return True


def bundled_configs() -> list[str]:
    root = resources.files("ltlshaping").joinpath("configs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML config file, or a bundled config by name."""
    p = Path(path)
    if p.exists():
        text, base = p.read_text(), p.parent
    else:
        name = str(path)
        if not name.endswith(".yaml"):
            name += ".yaml"
        res = resources.files("ltlshaping").joinpath("configs", name)
        if not res.is_file():
            raise ConfigError(f"no config file or bundled config named {str(path)!r}")
        text, base = res.read_text(), Path(".")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from None
    return from_dict(data, base)


def with_override(cfg: ExperimentConfig, key: str, value) -> ExperimentConfig:
    section, _, name = key.partition(".")
    sub = replace(getattr(cfg, section), **{name: value})
    out = replace(cfg, **{section: sub})
    validate(out)
    return out
