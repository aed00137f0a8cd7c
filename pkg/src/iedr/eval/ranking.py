"""Sampled-candidate ranking evaluation (one positive plus ``k`` negatives per list)."""
from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from ..data import Batch, Instance, ItemCatalog, sample_eval_candidates
from .metrics import MetricsReport, auc, rank_of_positive

log = logging.getLogger(__name__)

Scorer = Callable[[Batch], np.ndarray]


def _scorer(model) -> Scorer:
    return model.score if hasattr(model, "score") else model


def candidate_lists(test: Sequence[Instance], catalog: ItemCatalog, rng: np.random.Generator,
                    negatives: int = 99, history: dict[str, set[str]] | None = None
                    ) -> list[list[Instance]]:
    """Per test positive: ``[positive, neg_1, ..., neg_k]``."""
    position = catalog.position()
    out = []
    for inst in test:
        excl = history.get(inst.user_key) if history is not None else None
        out.append([inst] + sample_eval_candidates(inst, catalog, negatives, rng, excl, position))
    short = sum(len(lst) <= negatives for lst in out)
    if short:
        log.warning("%d of %d lists have fewer than %d eligible negatives; k reduced",
                    short, len(out), negatives)
    return out


def score_lists(model, lists: list[list[Instance]], chunk: int = 64) -> list[np.ndarray]:
    score = _scorer(model)
    out: list[np.ndarray] = []
    for lo in range(0, len(lists), chunk):
        part = lists[lo:lo + chunk]
        flat = [inst for lst in part for inst in lst]
        s = np.asarray(score(Batch.from_instances(flat)), dtype=np.float64)
        bounds = np.cumsum([0] + [len(lst) for lst in part])
        out.extend(s[a:b] for a, b in zip(bounds[:-1], bounds[1:]))
    return out


def evaluate(model, test: Sequence[Instance], catalog: ItemCatalog, rng: np.random.Generator,
             negatives: int = 99, history: dict[str, set[str]] | None = None,
             return_ranks: bool = False):
    """Mean NDCG@5/10, Recall@5/10 and AUC over the test positives.

    ``model`` is anything with ``score(batch) -> scores`` or a bare callable.
    ``history`` (user -> items seen in training) removes those items from the
    candidate pool. The same ``rng`` drives candidate sampling and tie breaks.
    """
    if not test:
        raise ValueError("empty test set")
    lists = candidate_lists(test, catalog, rng, negatives, history)
    scores = score_lists(model, lists)
    ranks, aucs = [], []
    for s in scores:
        if not np.all(np.isfinite(s)):
            raise FloatingPointError("non-finite scores during evaluation")
        ranks.append(rank_of_positive(s, 0, rng))
        aucs.append(auc(s[0], s[1:]))
    report = MetricsReport.from_ranks(ranks, aucs)
    return (report, np.asarray(ranks)) if return_ranks else report
