"""Uniform negative-item sampling for training and ranking evaluation."""
from __future__ import annotations

import logging
from collections import defaultdict

import numpy as np

from .schema import DataError, Instance, ItemCatalog

log = logging.getLogger(__name__)


def sample_train_negatives(positive: Instance, catalog: ItemCatalog, k: int,
                           rng: np.random.Generator,
                           position: dict[str, int] | None = None) -> list[Instance]:
    """``k`` copies of ``positive`` with the item swapped for a uniformly drawn other item, label 0.

    Draws are with replacement across the ``k`` negatives.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(catalog)
    if n < 2:
        raise DataError("item catalog needs at least two items to draw negatives")
    pos = (position or catalog.position()).get(positive.item_key)
    out = []
    for _ in range(k):
        if pos is None:
            j = int(rng.integers(n))
        else:
            j = int(rng.integers(n - 1))
            j += j >= pos
        out.append(positive.with_item(catalog.keys[j], catalog.feats[j], 0))
    return out


def augment_with_negatives(positives: list[Instance], catalog: ItemCatalog, k: int,
                           rng: np.random.Generator) -> list[Instance]:
    """Each positive followed by its ``k`` sampled negatives."""
    position = catalog.position()
    out = []
    for inst in positives:
        out.append(inst)
        out.extend(sample_train_negatives(inst, catalog, k, rng, position))
    return out


def user_history(instances: list[Instance]) -> dict[str, set[str]]:
    hist: dict[str, set[str]] = defaultdict(set)
    for inst in instances:
        if inst.label == 1:
            hist[inst.user_key].add(inst.item_key)
    return hist


def sample_eval_candidates(positive: Instance, catalog: ItemCatalog, k: int,
                           rng: np.random.Generator, exclude: set[str] | None = None,
                           position: dict[str, int] | None = None) -> list[Instance]:
    """``k`` distinct negative candidates, never the positive item nor anything in ``exclude``.

    When fewer than ``k`` items are eligible, all of them are returned (callers
    that build many lists report the shortfall once).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    position = position or catalog.position()
    banned = {positive.item_key}
    if exclude:
        banned |= exclude
    banned_idx = np.array(sorted(position[b] for b in banned if b in position), dtype=np.int64)
    eligible = np.setdiff1d(np.arange(len(catalog)), banned_idx, assume_unique=True)
    if len(eligible) == 0:
        raise DataError("no eligible candidate items")
    if len(eligible) < k:
        log.debug("only %d eligible candidate items, wanted %d", len(eligible), k)
        k = len(eligible)
    chosen = rng.choice(eligible, size=k, replace=False)
    return [positive.with_item(catalog.keys[j], catalog.feats[j], 0) for j in chosen]
