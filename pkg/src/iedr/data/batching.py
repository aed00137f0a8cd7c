from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .schema import Instance


def pad(rows: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad variable-length id lists with 0 and return (ids, mask)."""
    width = max((len(r) for r in rows), default=1)
    ids = np.zeros((len(rows), width), dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=bool)
    for i, r in enumerate(rows):
        ids[i, :len(r)] = r
        mask[i, :len(r)] = True
    return ids, mask


@dataclass
class Batch:
    user_ids: np.ndarray
    user_mask: np.ndarray
    item_ids: np.ndarray
    item_mask: np.ndarray
    ctx_ids: np.ndarray
    ctx_mask: np.ndarray
    labels: np.ndarray
    ctx_keys: np.ndarray  # integer code per distinct context, for NegGen1

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_instances(cls, instances: Sequence[Instance]) -> "Batch":
        u, um = pad([i.user_feats for i in instances])
        v, vm = pad([i.item_feats for i in instances])
        c, cm = pad([i.context_feats for i in instances])
        _, ctx_keys = np.unique(np.where(cm, c, -1), axis=0, return_inverse=True)
        return cls(u, um, v, vm, c, cm, np.array([i.label for i in instances], dtype=np.float64),
                   ctx_keys.reshape(-1))


def iterate_batches(instances: Sequence[Instance], batch_size: int,
                    rng: np.random.Generator | None = None) -> Iterator[Batch]:
    """Yield ``ceil(len/batch_size)`` batches, shuffled when ``rng`` is given."""
    order = np.arange(len(instances))
    if rng is not None:
        rng.shuffle(order)
    for lo in range(0, len(order), batch_size):
        yield Batch.from_instances([instances[i] for i in order[lo:lo + batch_size]])
