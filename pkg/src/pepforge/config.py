"""Application configuration loaded from YAML."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .grpo import GrpoConfig, GrpoError
from .properties import BucketThresholds, SplitCaps, SurrogateCoefficients
from .prompts import ObjectiveMode, PromptKind
from .reward import RewardConfig

ENV_VAR = "PEPFORGE_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentSettings:
    k: int = 100
    retry_cap: int = 10

    def __post_init__(self):
        if self.k < 1 or self.retry_cap < 0:
            raise ValueError("augment.k must be >= 1 and retry_cap >= 0")


@dataclass(frozen=True)
class PromptSettings:
    kind: PromptKind = PromptKind.COT
    objective: ObjectiveMode = ObjectiveMode.ALL

    def __post_init__(self):
        object.__setattr__(self, "kind", PromptKind(self.kind))
        object.__setattr__(self, "objective", ObjectiveMode(self.objective))


@dataclass(frozen=True)
class ServiceSettings:
    host: str = "127.0.0.1"
    port: int = 8000


@dataclass(frozen=True)
class AppConfig:
    rng_seed: int = 0
    vocabulary: Path | None = None
    thresholds: BucketThresholds = field(default_factory=BucketThresholds)
    surrogate: SurrogateCoefficients = field(default_factory=SurrogateCoefficients)
    reward: RewardConfig = field(default_factory=RewardConfig)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    splits: SplitCaps = field(default_factory=SplitCaps)
    augment: AugmentSettings = field(default_factory=AugmentSettings)
    prompts: PromptSettings = field(default_factory=PromptSettings)
    service: ServiceSettings = field(default_factory=ServiceSettings)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None, base_dir: Path | None = None) -> "AppConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        sections = {
            "thresholds": BucketThresholds,
            "reward": RewardConfig,
            "grpo": GrpoConfig,
            "splits": SplitCaps,
            "augment": AugmentSettings,
            "prompts": PromptSettings,
            "service": ServiceSettings,
        }
        kwargs: dict[str, Any] = {}
        try:
            for name, value in data.items():
                if name == "surrogate":
                    kwargs[name] = SurrogateCoefficients.from_mapping(value or {})
                elif name in sections:
                    kwargs[name] = _section(sections[name], name, value or {})
                elif name == "vocabulary":
                    kwargs[name] = None if value is None else _resolve(value, base_dir)
                elif name == "rng_seed":
                    kwargs[name] = int(value)
            cfg = cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError, GrpoError) as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.vocabulary is not None and not cfg.vocabulary.is_file():
            raise ConfigError(f"vocabulary file not found: {cfg.vocabulary}")
        return cfg

    @classmethod
    def load(cls, path: str | Path | None = None) -> "AppConfig":
        """Load ``path``, else ``$PEPFORGE_CONFIG``, else defaults."""
        path = path or os.environ.get(ENV_VAR)
        if not path:
            return cls()
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a mapping")
        return cls.from_mapping(data, path.parent)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["vocabulary"] = None if self.vocabulary is None else str(self.vocabulary)
        return json.loads(json.dumps(out, default=_plain))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _section(cls, name: str, value: Any):
    if not isinstance(value, Mapping):
        raise ConfigError(f"config section {name!r} must be a mapping")
    known = {f.name for f in fields(cls) if f.init}
    unknown = sorted(set(value) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {unknown}")
    converted = {k: tuple(v) if isinstance(v, list) else v for k, v in value.items()}
    return cls(**converted)


def _resolve(value: str, base_dir: Path | None) -> Path:
    p = Path(value)
    if not p.is_absolute() and base_dir is not None:
        p = base_dir / p
    return p


def _plain(obj):
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialise {type(obj).__name__}")
