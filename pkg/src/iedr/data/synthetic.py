"""Synthetic interactions with known intrinsic and extrinsic structure.

Selection score for user ``u``, item ``v`` in context ``c``::

    s = a * <g_u, g_v> / sqrt(k)  +  b * alpha_u * <t_c, e_vc> / sqrt(k)  +  noise

``g_u``, ``g_v`` are context-free (intrinsic) latents and ``t_c`` is a context
taste drawn independently of every user latent. The per item-and-context
latent is ``e_vc = A_c h_v / sqrt(k)`` with Gaussian ``A_c`` and ``h_v``: each
``e_vc`` is close to a unit Gaussian vector, yet items share structure across
contexts so the extrinsic part is learnable from a finite log. ``alpha_u`` in
``[1 - spread, 1 + spread]`` says how strongly context sways the user. Each
record draws a context uniformly and emits the top-scoring item as a positive.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .schema import Instance, ItemCatalog, SyntheticSpec, Vocabulary


@dataclass
class SyntheticTruth:
    user_intrinsic: np.ndarray       # (n_users, k)
    item_intrinsic: np.ndarray       # (n_items, k)
    item_context_extrinsic: np.ndarray  # (n_items, n_contexts, k)
    context_taste: np.ndarray        # (n_contexts, k)
    user_sensitivity: np.ndarray     # (n_users,)
    spec: SyntheticSpec

    def scores(self, user: int, context: int) -> np.ndarray:
        """Noise-free score of every item for one (user, context)."""
        k = self.user_intrinsic.shape[1]
        s = self.spec
        intr = self.item_intrinsic @ self.user_intrinsic[user]
        extr = self.item_context_extrinsic[:, context, :] @ self.context_taste[context]
        return (s.intrinsic_strength * intr
                + s.extrinsic_strength * self.user_sensitivity[user] * extr) / np.sqrt(k)

    def to_json(self) -> str:
        return json.dumps({
            "spec": vars(self.spec),
            "user_intrinsic": self.user_intrinsic.tolist(),
            "item_intrinsic": self.item_intrinsic.tolist(),
            "item_context_extrinsic": self.item_context_extrinsic.tolist(),
            "context_taste": self.context_taste.tolist(),
            "user_sensitivity": self.user_sensitivity.tolist(),
        })

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


def context_fields(n_contexts: int) -> tuple[int, int]:
    """Factor the context id into two categorical fields of sizes (a, b), a*b == n."""
    a = int(np.sqrt(n_contexts))
    while n_contexts % a:
        a -= 1
    return a, n_contexts // a


def user_key(u: int) -> str:
    return f"u{u}"


def item_key(v: int) -> str:
    return f"i{v}"


def context_tokens(c: int, n_contexts: int) -> list[tuple[str, str]]:
    a, _ = context_fields(n_contexts)
    return [("slot", str(c % a)), ("period", str(c // a))]


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()
                       ) -> tuple[Vocabulary, list[Instance], SyntheticTruth, ItemCatalog]:
    """Draw latents and emit ``records_per_user`` positive records per user.

    Returns the vocabulary, the positives in per-user time order, the latent
    ground truth and a catalog listing every item (drawn or not).
    """
    rng = np.random.default_rng(spec.seed)
    k = spec.latent_dim
    truth = SyntheticTruth(
        user_intrinsic=rng.standard_normal((spec.n_users, k)),
        item_intrinsic=rng.standard_normal((spec.n_items, k)),
        item_context_extrinsic=np.einsum(
            "cab,vb->vca", rng.standard_normal((spec.n_contexts, k, k)),
            rng.standard_normal((spec.n_items, k))) / np.sqrt(k),
        context_taste=rng.standard_normal((spec.n_contexts, k)),
        user_sensitivity=1.0 + spec.sensitivity_spread * rng.uniform(-1.0, 1.0, spec.n_users),
        spec=spec,
    )

    vocab = Vocabulary()
    user_ids = [vocab.lookup("user_id", user_key(u), "user") for u in range(spec.n_users)]
    item_ids = [vocab.lookup("item_id", item_key(v), "item") for v in range(spec.n_items)]
    ctx_ids = [tuple(vocab.lookup(f, val, "context") for f, val in context_tokens(c, spec.n_contexts))
               for c in range(spec.n_contexts)]

    instances = []
    for u in range(spec.n_users):
        contexts = rng.integers(spec.n_contexts, size=spec.records_per_user)
        for t, c in enumerate(contexts):
            noisy = truth.scores(u, int(c)) + spec.noise_std * rng.standard_normal(spec.n_items)
            v = int(np.argmax(noisy))
            instances.append(Instance((user_ids[u],), (item_ids[v],), ctx_ids[c], 1,
                                      user_key(u), item_key(v), float(t)))
    catalog = ItemCatalog([item_key(v) for v in range(spec.n_items)],
                          [(item_ids[v],) for v in range(spec.n_items)])
    return vocab, instances, truth, catalog


def context_index(inst: Instance, vocab: Vocabulary, n_contexts: int) -> int:
    """Recover the synthetic context id from an instance's context features."""
    a, _ = context_fields(n_contexts)
    vals = dict(vocab.tokens[i] for i in inst.context_feats)
    return int(vals["slot"]) + a * int(vals["period"])


def entity_features(vocab: Vocabulary, spec: SyntheticSpec
                    ) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]], list[tuple[str, tuple[int, ...]]]]:
    """Feature tuples for every synthetic user and context, and ``(key, feats)`` per item."""
    users = [(vocab.lookup("user_id", user_key(u), "user"),) for u in range(spec.n_users)]
    contexts = [tuple(vocab.lookup(f, v, "context") for f, v in context_tokens(c, spec.n_contexts))
                for c in range(spec.n_contexts)]
    items = [(item_key(v), (vocab.lookup("item_id", item_key(v), "item"),))
             for v in range(spec.n_items)]
    return users, contexts, items
