"""Run configuration: nested dataclasses loaded from JSON, with a stable hash."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields

from ..cied import CiclConfig, DisConfig
from ..data import SplitSpec, SyntheticSpec
from ..encoder import EncoderConfig
from ..factors import FactorConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 1024
    epochs: int = 50
    lr: float = 1e-3
    optimizer: str = "adam"
    lambda1: float = 0.1
    lambda2: float = 0.1
    seed: int = 0
    cicl_on: bool = True
    dis_on: bool = True
    patience: int = 5
    step1_every: int = 1
    dtype: str = "float64"
    eval_negatives: int = 99
    eval_exclude_train: bool = True

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be >= 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.epochs < 1 or self.patience < 1 or self.step1_every < 1:
            raise ValueError("epochs, patience and step1_every must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.dtype not in ("float64", "float32"):
            raise ValueError(f"unknown dtype {self.dtype!r}")


SECTIONS = {
    "train": TrainConfig,
    "encoder": EncoderConfig,
    "factor": FactorConfig,
    "cicl": CiclConfig,
    "dis": DisConfig,
    "split": SplitSpec,
    "synthetic": SyntheticSpec,
}


@dataclass(frozen=True)
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    factor: FactorConfig = field(default_factory=FactorConfig)
    cicl: CiclConfig = field(default_factory=CiclConfig)
    dis: DisConfig = field(default_factory=DisConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        unknown = set(raw) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        parts = {}
        for name, typ in SECTIONS.items():
            sec = raw.get(name, {})
            if not isinstance(sec, dict):
                raise ConfigError(f"section {name!r} must be an object")
            allowed = {f.name for f in fields(typ)}
            bad = set(sec) - allowed
            if bad:
                raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
            try:
                parts[name] = typ(**sec)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid {name!r} section: {exc}") from exc
        return cls(**parts)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(raw)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    def replace(self, section: str, **changes) -> "RunConfig":
        """Copy with ``changes`` applied to one section."""
        if section not in SECTIONS:
            raise ConfigError(f"unknown section {section!r}")
        try:
            new_sec = dataclasses.replace(getattr(self, section), **changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return dataclasses.replace(self, **{section: new_sec})

    def override(self, dotted: str, value) -> "RunConfig":
        """Apply a ``section.key=value`` override, coercing ``value`` to the field type."""
        section, _, key = dotted.partition(".")
        if section not in SECTIONS or not key:
            raise ConfigError(f"override must look like section.key, got {dotted!r}")
        current = getattr(self, section)
        if not hasattr(current, key):
            raise ConfigError(f"unknown key {dotted!r}")
        old = getattr(current, key)
        if isinstance(value, str):
            value = _coerce(value, old)
        return self.replace(section, **{key: value})


def _coerce(text: str, like):
    if isinstance(like, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {text!r}")
    try:
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc}") from exc
    return text


# Ablation presets: name -> list of (section, changes).
VARIANTS: dict[str, list[tuple[str, dict]]] = {
    "IEDR": [],
    "noCL": [("train", {"cicl_on": False})],
    "noDis": [("train", {"dis_on": False})],
    "noCIED": [("train", {"cicl_on": False, "dis_on": False})],
    "vCLUB": [("dis", {"mode": "vCLUB"})],
    "BiDis": [("dis", {"mode": "BiDis"})],
    "Linear": [("factor", {"variant": "Linear", "combine": "concat"})],
    "LinearReLU": [("factor", {"variant": "LinearReLU", "combine": "concat"})],
    "Split": [("factor", {"variant": "Split"})],
    "AVG": [("encoder", {"variant": "AVG"})],
    "MLP": [("encoder", {"variant": "MLP"})],
    "BI": [("encoder", {"variant": "BI"})],
    "SIGN": [("encoder", {"variant": "SIGN"})],
    "normal_init": [("encoder", {"embed_init": "normal"})],
}


def apply_variant(config: RunConfig, name: str) -> RunConfig:
    if name not in VARIANTS:
        raise ConfigError(f"unknown variant {name!r}; known: {', '.join(VARIANTS)}")
    for section, changes in VARIANTS[name]:
        config = config.replace(section, **changes)
    return config
