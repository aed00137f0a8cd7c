"""The full recommender: encoders -> factor generators -> dot-product prediction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cied import VariationalHead
from ..data import Batch
from ..diffcore import (
    OMEGA,
    THETA,
    Module,
    Tensor,
    add,
    binary_cross_entropy,
    mul,
    no_grad,
    sigmoid,
    substream,
    sum_,
    take,
)
from ..encoder import FeatureEncoder
from ..factors import FactorGenerator, FactorPair
from .config import RunConfig


def encode_unique(encoder: FeatureEncoder, ids: np.ndarray, mask: np.ndarray) -> Tensor:
    """Encode each distinct feature row once and gather back to the batch order."""
    key = np.where(mask, ids, -1)
    uniq, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    if len(uniq) == len(key):
        return encoder(ids, mask)
    reps = encoder(ids[first], mask[first])
    return take(reps, inverse.reshape(-1))


def logits(u: FactorPair, v: FactorPair) -> Tensor:
    return sum_(mul(add(u.intrinsic, u.extrinsic), add(v.intrinsic, v.extrinsic)), axis=-1)


def predict(u: FactorPair, v: FactorPair) -> Tensor:
    """Probability ``sigmoid((in_u + ex_u) . (in_v + ex_v))``."""
    return sigmoid(logits(u, v))


def rp_loss(probability, label) -> Tensor:
    """Batch-mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7]."""
    return binary_cross_entropy(probability, label, eps=1e-7)


@dataclass
class Forward:
    u: Tensor
    v: Tensor
    c: Tensor
    fu: FactorPair
    fv: FactorPair


class IEDRModel(Module):
    def __init__(self, vocab_size: int, config: RunConfig, seed: int | None = None):
        self.config = config
        rng = substream(config.train.seed if seed is None else seed, "init")
        enc, d = config.encoder, config.encoder.embed_dim
        self.user_encoder = FeatureEncoder(vocab_size, enc, rng)
        self.item_encoder = FeatureEncoder(vocab_size, enc, rng)
        self.context_encoder = FeatureEncoder(vocab_size, enc, rng)
        self.user_factors = FactorGenerator(d, config.factor, rng)
        self.item_factors = FactorGenerator(d, config.factor, rng)
        self.q1_user = VariationalHead(d, rng, enc.hidden_dim)
        self.q2_user = VariationalHead(d, rng, enc.hidden_dim)
        self.q1_item = VariationalHead(d, rng, enc.hidden_dim)
        self.q2_item = VariationalHead(d, rng, enc.hidden_dim)
        if config.train.dtype == "float32":
            self.astype(np.float32)

    @property
    def dtype(self):
        return self.user_encoder.embedding.weight.dtype

    def group(self, name: str) -> list:
        return [p for p in self.parameters() if p.group == name]

    def theta(self) -> list:
        return self.group(THETA)

    def omega(self) -> list:
        return self.group(OMEGA)

    def forward(self, batch: Batch) -> Forward:
        u = encode_unique(self.user_encoder, batch.user_ids, batch.user_mask)
        v = encode_unique(self.item_encoder, batch.item_ids, batch.item_mask)
        c = encode_unique(self.context_encoder, batch.ctx_ids, batch.ctx_mask)
        return Forward(u, v, c, self.user_factors(u, c), self.item_factors(v, c))

    def score(self, batch: Batch) -> np.ndarray:
        """Logits for every row of ``batch`` (no tape recorded)."""
        with no_grad():
            out = self.forward(batch)
            return logits(out.fu, out.fv).data.astype(np.float64)

    def factors(self, batch: Batch) -> tuple[FactorPair, FactorPair]:
        with no_grad():
            out = self.forward(batch)
        return out.fu, out.fv
