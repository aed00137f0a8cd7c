from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

GROUPS = ("user", "item", "context")
UNK = "<UNK>"


class DataError(ValueError):
    """Malformed or inconsistent dataset input."""


class Vocabulary:
    """Dense feature index over ``field:value`` tokens, one reserved UNK per field.

    Fields are assigned to exactly one of the user/item/context groups the
    first time they are seen; the field's UNK token is allocated at the same
    moment, so an empty dataset yields an empty vocabulary.
    """

    def __init__(self):
        self.field_group: dict[str, str] = {}
        self.tokens: list[tuple[str, str]] = []
        self.index: dict[tuple[str, str], int] = {}
        self.frozen = False

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Vocabulary) and self.field_group == other.field_group
                and self.tokens == other.tokens)

    @property
    def fields(self) -> list[str]:
        return list(self.field_group)

    def fields_of(self, group: str) -> list[str]:
        return [f for f, g in self.field_group.items() if g == group]

    def _register_field(self, fname: str, group: str) -> None:
        known = self.field_group.get(fname)
        if known is None:
            if self.frozen:
                raise DataError(f"unknown field {fname!r} in frozen vocabulary")
            self.field_group[fname] = group
            self._append(fname, UNK)
        elif known != group:
            raise DataError(f"field {fname!r} belongs to group {known!r}, found in {group!r}")

    def _append(self, fname: str, value: str) -> int:
        idx = len(self.tokens)
        self.tokens.append((fname, value))
        self.index[(fname, value)] = idx
        return idx

    def lookup(self, fname: str, value: str, group: str) -> int:
        """Index of ``fname:value``, adding it unless frozen (then UNK)."""
        self._register_field(fname, group)
        key = (fname, value)
        if key in self.index:
            return self.index[key]
        if self.frozen:
            return self.index[(fname, UNK)]
        return self._append(fname, value)

    def unk(self, fname: str) -> int:
        return self.index[(fname, UNK)]

    def token(self, idx: int) -> str:
        fname, value = self.tokens[idx]
        return f"{fname}:{value}"

    def group_of(self, idx: int) -> str:
        return self.field_group[self.tokens[idx][0]]

    def freeze(self) -> "Vocabulary":
        self.frozen = True
        return self

    def to_json(self) -> str:
        return json.dumps({"fields": self.field_group,
                           "tokens": [f"{f}:{v}" for f, v in self.tokens]}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        payload = json.loads(text)
        vocab = cls()
        vocab.field_group = dict(payload["fields"])
        for tok in payload["tokens"]:
            fname, value = tok.split(":", 1)
            vocab._append(fname, value)
        return vocab

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class Instance:
    user_feats: tuple[int, ...]
    item_feats: tuple[int, ...]
    context_feats: tuple[int, ...]
    label: int
    user_key: str
    item_key: str
    order_key: float | None = None

    def with_item(self, item_key: str, item_feats: tuple[int, ...], label: int) -> "Instance":
        return Instance(self.user_feats, tuple(item_feats), self.context_feats, label,
                        self.user_key, item_key, self.order_key)

    @property
    def context_key(self) -> tuple[int, ...]:
        return tuple(sorted(self.context_feats))


@dataclass(frozen=True)
class SplitSpec:
    min_records: int = 5
    eval_negatives: int = 99
    train_negatives: int = 2

    def __post_init__(self):
        if self.eval_negatives < 1 or self.train_negatives < 1:
            raise ValueError("negative counts must be >= 1")
        if self.min_records < 3:
            raise ValueError("min_records must leave at least one training record")


@dataclass(frozen=True)
class SyntheticSpec:
    n_users: int = 200
    n_items: int = 500
    n_contexts: int = 20
    latent_dim: int = 8
    intrinsic_strength: float = 1.0
    extrinsic_strength: float = 1.0
    noise_std: float = 0.5
    seed: int = 0
    records_per_user: int = 20
    sensitivity_spread: float = 1.0

    def __post_init__(self):
        for name in ("n_users", "n_items", "n_contexts", "latent_dim"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")
        if self.intrinsic_strength < 0 or self.extrinsic_strength < 0:
            raise ValueError("strengths must be >= 0")
        if self.noise_std < 0 or self.records_per_user < 1:
            raise ValueError("noise_std must be >= 0 and records_per_user >= 1")
        if self.sensitivity_spread < 0:
            raise ValueError("sensitivity_spread must be >= 0")


@dataclass
class ItemCatalog:
    """Distinct items (key -> feature ids) in first-seen order."""

    keys: list[str] = field(default_factory=list)
    feats: list[tuple[int, ...]] = field(default_factory=list)

    @classmethod
    def from_instances(cls, instances) -> "ItemCatalog":
        seen: dict[str, tuple[int, ...]] = {}
        for inst in instances:
            seen.setdefault(inst.item_key, inst.item_feats)
        return cls(list(seen), list(seen.values()))

    def __len__(self) -> int:
        return len(self.keys)

    def position(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.keys)}
