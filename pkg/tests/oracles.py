"""Independent reference computations the package is checked against.

Nothing here imports package code paths under test; every oracle is written
from the definition with plain loops or numpy.
"""
from __future__ import annotations

import math
from itertools import product

import numpy as np


def central_difference(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Numerical gradient of scalar ``f`` at ``x`` by central differences."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + eps
        hi = f(x)
        x[idx] = old - eps
        lo = f(x)
        x[idx] = old
        grad[idx] = (hi - lo) / (2 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    denom = max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)


# -- ranking metrics ----------------------------------------------------------

def rank_by_counting(scores, positive: int) -> int:
    """1 + number of candidates scored strictly above the positive (distinct scores)."""
    s = list(scores)
    return 1 + sum(1 for j, v in enumerate(s) if j != positive and v > s[positive])


def ndcg_oracle(scores, positive: int, k: int) -> float:
    r = rank_by_counting(scores, positive)
    return 1.0 / math.log2(1 + r) if r <= k else 0.0


def recall_oracle(scores, positive: int, k: int) -> float:
    return 1.0 if rank_by_counting(scores, positive) <= k else 0.0


def auc_oracle(pos: float, negs) -> float:
    """Pairwise count: wins 1, ties 1/2."""
    total = 0.0
    for v in negs:
        total += 1.0 if pos > v else 0.5 if pos == v else 0.0
    return total / len(negs)


def tie_broken_rank(scores, positive: int, perm) -> int:
    """Rank under the policy: shuffle by ``perm``, then stable sort descending."""
    shuffled = [(scores[i], pos, i) for pos, i in enumerate(perm)]
    shuffled.sort(key=lambda t: (-t[0], t[1]))
    return 1 + [t[2] for t in shuffled].index(positive)


# -- contrastive loss -----------------------------------------------------------

def _cos(a, b) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def info_nce_oracle(anchor, positive, negatives, tau: float) -> float:
    """Explicit softmax: -log(exp(s+) / (exp(s+) + sum exp(s-)))."""
    s_pos = math.exp(_cos(anchor, positive) / tau)
    s_neg = sum(math.exp(_cos(anchor, n) / tau) for n in negatives)
    return -math.log(s_pos / (s_pos + s_neg))


# -- encoders -------------------------------------------------------------------

def mlp_oracle(x, w1, b1, w2, b2):
    return np.maximum(x @ w1 + b1, 0.0) @ w2 + b2


def sign_oracle(emb: np.ndarray, h, include_self_pairs: bool = True) -> np.ndarray:
    """Double loop: for each node, mean of h over its neighbours; then mean over nodes."""
    p = len(emb)
    node_means = []
    for i in range(p):
        terms = [h(emb[i] * emb[j]) for j in range(p) if include_self_pairs or j != i]
        node_means.append(np.mean(terms, axis=0))
    return np.mean(node_means, axis=0)


def bi_oracle(emb: np.ndarray) -> np.ndarray:
    return np.mean([emb[i] * emb[j] for i, j in product(range(len(emb)), repeat=2)], axis=0)


# -- disentangling --------------------------------------------------------------

def bi_dis_oracle(o_in, o_ex, q1, q2, idx) -> float:
    """Per-sample loop over the vCLUB terms with explicitly given negative indices."""
    total = 0.0
    for i in range(len(o_in)):
        pos = np.mean((o_ex[i] - q1(o_in[i])) ** 2) + np.mean((o_in[i] - q2(o_ex[i])) ** 2)
        neg = 0.0
        for r in idx[i]:
            neg += np.mean((o_ex[i] - q1(o_in[r])) ** 2) + np.mean((o_in[i] - q2(o_ex[r])) ** 2)
        total += 0.5 * (neg / len(idx[i]) - pos)
    return total / len(o_in)
