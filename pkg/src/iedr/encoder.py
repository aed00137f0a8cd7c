"""Feature-set encoders: SIGN pairwise-interaction graph plus AVG/MLP/BI variants.

All encoders map a padded batch of feature ids ``(N, P)`` with a boolean mask
to representations ``(N, d)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diffcore import MLP, Embedding, Module, Tensor, concat, mul, reshape, sum_

VARIANTS = ("SIGN", "AVG", "MLP", "BI")


@dataclass(frozen=True)
class EncoderConfig:
    variant: str = "SIGN"
    embed_dim: int = 32
    hidden_dim: int = 128
    include_self_pairs: bool = True
    pair_input: str = "product"  # or "concat"
    embed_init: str = "uniform"  # or "normal"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown encoder variant {self.variant!r}")
        if self.embed_dim < 1 or self.hidden_dim < 1:
            raise ValueError("embed_dim and hidden_dim must be >= 1")
        if self.pair_input not in ("product", "concat"):
            raise ValueError(f"unknown pair_input {self.pair_input!r}")
        if self.embed_init not in ("uniform", "normal"):
            raise ValueError(f"unknown embed_init {self.embed_init!r}")


def _check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or not mask.any(axis=1).all():
        raise ValueError("every feature set must contain at least one feature")
    return mask


def pair_weights(mask: np.ndarray, include_self_pairs: bool) -> np.ndarray:
    """Weights ``w[n, i, j]`` so that sum_ij w * h_ij is the mean over nodes of
    the mean over each node's neighbours."""
    mask = _check_mask(mask)
    adj = (mask[:, :, None] & mask[:, None, :]).astype(np.float64)
    if not include_self_pairs:
        adj = adj * (1.0 - np.eye(mask.shape[1]))[None]
    deg = adj.sum(axis=2)
    if np.any(deg[mask] == 0):
        raise ValueError("a feature has no neighbours; enable self-pairs for singleton sets")
    n_nodes = mask.sum(axis=1, keepdims=True).astype(np.float64)
    node_w = np.where(mask, 1.0 / np.maximum(deg, 1.0), 0.0) / n_nodes
    return adj * node_w[:, :, None]


def mean_weights(mask: np.ndarray) -> np.ndarray:
    mask = _check_mask(mask)
    return mask / mask.sum(axis=1, keepdims=True)


def sign_aggregate(emb: Tensor, mask: np.ndarray, h: Callable[[Tensor], Tensor],
                   include_self_pairs: bool = True, pair_input: str = "product") -> Tensor:
    """mean_i mean_{j in N(i)} h(pair(z_i, z_j)) over a padded batch ``(N, P, d)``."""
    n, p, d = emb.shape
    w = pair_weights(mask, include_self_pairs).astype(emb.dtype)
    zi = reshape(emb, (n, p, 1, d))
    zj = reshape(emb, (n, 1, p, d))
    if pair_input == "product":
        pairs = reshape(mul(zi, zj), (n * p * p, d))
    else:
        ones = np.ones((1, 1, p, 1), dtype=emb.dtype)
        left = reshape(mul(zi, ones), (n * p * p, d))
        right = reshape(mul(zj, np.ones((1, p, 1, 1), dtype=emb.dtype)), (n * p * p, d))
        pairs = concat([left, right], axis=-1)
    hz = h(pairs)
    out_dim = hz.shape[-1]
    hz = reshape(hz, (n, p, p, out_dim))
    return sum_(mul(hz, w[:, :, :, None]), axis=(1, 2))


def avg_aggregate(emb: Tensor, mask: np.ndarray) -> Tensor:
    w = mean_weights(mask).astype(emb.dtype)
    return sum_(mul(emb, w[:, :, None]), axis=1)


def bi_aggregate(emb: Tensor, mask: np.ndarray, include_self_pairs: bool = True) -> Tensor:
    return sign_aggregate(emb, mask, lambda x: x, include_self_pairs, "product")


class FeatureEncoder(Module):
    """One encoder (user, item or context side) with its own embedding table."""

    def __init__(self, vocab_size: int, config: EncoderConfig, rng: np.random.Generator):
        self.config = config
        d, hid = config.embed_dim, config.hidden_dim
        self.embedding = Embedding(vocab_size, d, rng, config.embed_init)
        if config.variant == "SIGN":
            in_dim = d if config.pair_input == "product" else 2 * d
            self.h = MLP(in_dim, hid, d, rng)
        elif config.variant == "MLP":
            self.h = MLP(d, hid, d, rng)
        else:
            self.h = None

    def __call__(self, ids: np.ndarray, mask: np.ndarray) -> Tensor:
        ids = np.asarray(ids)
        emb = self.embedding(ids)
        cfg = self.config
        if cfg.variant == "SIGN":
            return sign_aggregate(emb, mask, self.h, cfg.include_self_pairs, cfg.pair_input)
        if cfg.variant == "AVG":
            return avg_aggregate(emb, mask)
        if cfg.variant == "MLP":
            return self.h(avg_aggregate(emb, mask))
        return bi_aggregate(emb, mask, cfg.include_self_pairs)


def _single(feature_ids) -> tuple[np.ndarray, np.ndarray]:
    ids = np.asarray(feature_ids, dtype=np.int64).reshape(1, -1)
    if ids.size == 0:
        raise ValueError("empty feature set")
    return ids, np.ones_like(ids, dtype=bool)


def encode_sign(feature_ids, embeddings: Tensor, h: Callable[[Tensor], Tensor],
                include_self_pairs: bool = True) -> Tensor:
    """SIGN representation of one feature set given an embedding table and pair model ``h``."""
    from .diffcore import take
    ids, mask = _single(feature_ids)
    return sign_aggregate(take(embeddings, ids), mask, h, include_self_pairs)[0]


def encode_avg(feature_ids, embeddings: Tensor) -> Tensor:
    from .diffcore import take
    ids, mask = _single(feature_ids)
    return avg_aggregate(take(embeddings, ids), mask)[0]


def encode_mlp(feature_ids, embeddings: Tensor, mlp: Callable[[Tensor], Tensor]) -> Tensor:
    from .diffcore import take
    ids, mask = _single(feature_ids)
    return mlp(avg_aggregate(take(embeddings, ids), mask))[0]


def encode_bi(feature_ids, embeddings: Tensor, include_self_pairs: bool = True) -> Tensor:
    from .diffcore import take
    ids, mask = _single(feature_ids)
    return bi_aggregate(take(embeddings, ids), mask, include_self_pairs)[0]
