"""Single-relevant-item ranking metrics and the tie policy."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np


def rank_of_positive(scores, positive: int, rng: np.random.Generator | None = None) -> int:
    """1-based rank of ``scores[positive]`` when sorted descending.

    Ties are broken by candidate order after a seeded shuffle (a stable sort
    on the shuffled list); without ``rng`` the original order decides.
    """
    ranked = ranked_order(scores, rng)
    return int(np.flatnonzero(ranked == positive)[0]) + 1


def ranked_order(scores, rng: np.random.Generator | None = None) -> np.ndarray:
    """Candidate indices by descending score under the tie policy."""
    scores = np.asarray(scores, dtype=np.float64)
    order = rng.permutation(len(scores)) if rng is not None else np.arange(len(scores))
    return order[np.argsort(-scores[order], kind="stable")]


def ndcg_at_k(rank: int, k: int) -> float:
    return 1.0 / np.log2(1.0 + rank) if rank <= k else 0.0


def recall_at_k(rank: int, k: int) -> float:
    """Hit rate: with one relevant item, recall is 1 when it makes the top k."""
    return 1.0 if rank <= k else 0.0


def auc(positive_score: float, negative_scores) -> float:
    neg = np.asarray(negative_scores, dtype=np.float64)
    if neg.size == 0:
        raise ValueError("auc needs at least one negative")
    return float(((neg < positive_score).sum() + 0.5 * (neg == positive_score).sum()) / neg.size)


@dataclass
class RankedList:
    keys: list[str]
    scores: np.ndarray  # descending
    positive: int       # index of the positive in ``keys``

    @classmethod
    def build(cls, keys, scores, positive: int, rng: np.random.Generator | None = None):
        scores = np.asarray(scores, dtype=np.float64)
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        ranked = ranked_order(scores, rng)
        return cls([keys[i] for i in ranked], scores[ranked],
                   int(np.flatnonzero(ranked == positive)[0]))

    @property
    def rank(self) -> int:
        return self.positive + 1


@dataclass
class MetricsReport:
    ndcg_at_5: float
    ndcg_at_10: float
    recall_at_5: float
    recall_at_10: float
    auc: float
    n: int

    @classmethod
    def from_ranks(cls, ranks, aucs) -> "MetricsReport":
        ranks = np.asarray(ranks)
        if ranks.size == 0:
            raise ValueError("no lists to aggregate")
        return cls(
            float(np.mean([ndcg_at_k(r, 5) for r in ranks])),
            float(np.mean([ndcg_at_k(r, 10) for r in ranks])),
            float(np.mean(ranks <= 5)),
            float(np.mean(ranks <= 10)),
            float(np.mean(aucs)),
            int(ranks.size),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(list(self.to_dict()))
            out.writerow([repr(v) for v in self.to_dict().values()])


def expected_random_ndcg(k: int, n_candidates: int = 100) -> float:
    """E[NDCG@k] when the positive's rank is uniform on 1..n_candidates."""
    r = np.arange(1, min(k, n_candidates) + 1)
    return float((1.0 / np.log2(1.0 + r)).sum() / n_candidates)
