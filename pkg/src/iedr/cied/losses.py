"""Context-invariant contrastive loss and the vCLUB-style disentangling losses."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..diffcore import (
    MLP,
    THETA,
    Module,
    Tensor,
    as_tensor,
    concat,
    cosine_sim,
    dropout,
    logsumexp,
    mean,
    mse,
    reshape,
    sub,
    take,
)

log = logging.getLogger(__name__)

NEGGEN_MODES = ("NegGen1", "NegGen2", "Both")
DIS_MODES = ("BiDis", "vCLUB", "off")


@dataclass(frozen=True)
class CiclConfig:
    temperature: float = 0.5
    num_negatives: int = 40
    neg_context_dropout: float = 0.5
    neggen_mode: str = "Both"
    two_anchor: bool = False
    split_dropout: float = 0.1  # dropout for the context-free InfoNCE of the Split variant

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.num_negatives < 1:
            raise ValueError("num_negatives must be >= 1")
        if not 0 < self.neg_context_dropout < 1:
            raise ValueError("neg_context_dropout must lie in (0, 1)")
        if not 0 <= self.split_dropout < 1:
            raise ValueError("split_dropout must lie in [0, 1)")
        if self.neggen_mode not in NEGGEN_MODES:
            raise ValueError(f"unknown neggen_mode {self.neggen_mode!r}")


@dataclass(frozen=True)
class DisConfig:
    num_negatives: int = 5
    mode: str = "BiDis"

    def __post_init__(self):
        if self.num_negatives < 1:
            raise ValueError("num_negatives must be >= 1")
        if self.mode not in DIS_MODES:
            raise ValueError(f"unknown dis mode {self.mode!r}")


# -- sampling helpers ---------------------------------------------------------

def sample_other_indices(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``(n, k)`` indices drawn uniformly from ``{0..n-1} \\ {i}`` for row ``i``."""
    if n < 2:
        raise ValueError("need at least 2 samples to draw others")
    r = rng.integers(0, n - 1, size=(n, k))
    return r + (r >= np.arange(n)[:, None])


def sample_other_context(keys: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """For each row pick a batch index whose context key differs; -1 where none exists."""
    keys = np.asarray(keys)
    n = len(keys)
    out = np.full(n, -1, dtype=np.int64)
    todo = np.arange(n)
    for _ in range(32):
        if todo.size == 0:
            return out
        j = rng.integers(0, n, size=todo.size)
        ok = keys[j] != keys[todo]
        out[todo[ok]] = j[ok]
        todo = todo[~ok]
    for i in todo:
        cands = np.flatnonzero(keys != keys[i])
        if cands.size:
            out[i] = rng.choice(cands)
    return out


def gen_positive_context(context_rep: Tensor, ctx_keys: np.ndarray, config: CiclConfig,
                         rng: np.random.Generator) -> tuple[Tensor, np.ndarray]:
    """Alternative context ``c_j`` for every row of a batch.

    Returns the representations and the generator used per row (1 for a
    batch-sampled context, 2 for a dropout view).
    """
    n = context_rep.shape[0]
    mode = config.neggen_mode
    if mode == "NegGen1":
        which = np.ones(n, dtype=np.int64)
    elif mode == "NegGen2":
        which = np.full(n, 2, dtype=np.int64)
    else:
        which = np.where(rng.random(n) < 0.5, 1, 2)
    j = sample_other_context(ctx_keys, rng) if np.any(which == 1) else np.full(n, -1)
    stuck = (which == 1) & (j < 0)
    if stuck.any():
        log.warning("NegGen1: %d rows have no different context in the batch; using NegGen2",
                    int(stuck.sum()))
        which = np.where(stuck, 2, which)
    dropped = dropout(context_rep, config.neg_context_dropout, rng)
    if np.all(which == 2):
        return dropped, which
    sampled = take(context_rep, np.where(which == 1, j, 0))
    sel = (which == 1).astype(context_rep.dtype)[:, None]
    return sampled * sel + dropped * (1.0 - sel), which


# -- CICL ---------------------------------------------------------------------

def info_nce(anchor: Tensor, positive: Tensor, negatives: Tensor, temperature: float,
             eps: float | None = None) -> Tensor:
    """Per-row ``-log softmax`` of the positive among ``[positive, negatives]``.

    anchor, positive: ``(B, d)``; negatives: ``(B, n, d)``. Returns ``(B,)``.
    """
    s_pos = cosine_sim(anchor, positive, eps=eps) * (1.0 / temperature)
    b, d = anchor.shape
    s_neg = cosine_sim(reshape(anchor, (b, 1, d)), negatives, eps=eps) * (1.0 / temperature)
    logits = concat([reshape(s_pos, (b, 1)), s_neg], axis=1)
    return sub(logsumexp(logits, axis=1), s_pos)


def cicl_loss(anchor, positive, negatives, temperature: float = 0.5,
              eps: float | None = None) -> Tensor:
    """Batch-mean contrastive loss.

    Accepts one sample (``(d,)``, ``(d,)``, ``(n, d)``) or a batch
    (``(B, d)``, ``(B, d)``, ``(B, n, d)``). A zero-norm vector raises unless
    ``eps`` is given.
    """
    anchor, positive, negatives = as_tensor(anchor), as_tensor(positive), as_tensor(negatives)
    if anchor.ndim == 1:
        d = anchor.shape[0]
        anchor = reshape(anchor, (1, d))
        positive = reshape(positive, (1, d))
        negatives = reshape(negatives, (1, *negatives.shape))
    if anchor.shape != positive.shape or negatives.ndim != 3 \
            or negatives.shape[0] != anchor.shape[0] or negatives.shape[2] != anchor.shape[1]:
        raise ValueError(f"cicl_loss: incompatible shapes {anchor.shape}, {positive.shape}, "
                         f"{negatives.shape}")
    return mean(info_nce(anchor, positive, negatives, temperature, eps))


def cicl_batch(generator, entity_rep: Tensor, context_rep: Tensor, context_pos: Tensor,
               anchor_in: Tensor, config: CiclConfig, rng: np.random.Generator,
               eps: float = 1e-12) -> Tensor:
    """Contrastive loss for one side of a batch, sampling negatives as in the training loop.

    ``anchor_in`` is ``f(u_i, c_i).intrinsic`` (already computed for prediction).
    Positive is ``f(u_i, c_j).intrinsic``; negatives are ``L`` of
    ``f(u_l, c_i).intrinsic`` and ``L`` of ``f(u_l, c_j).intrinsic`` with ``l != i``.
    """
    b, d = entity_rep.shape
    big_l = config.num_negatives
    positive = generator(entity_rep, context_pos).intrinsic
    l1 = sample_other_indices(b, big_l, rng).reshape(-1)
    l2 = sample_other_indices(b, big_l, rng).reshape(-1)
    rows = np.repeat(np.arange(b), big_l)
    users = take(entity_rep, np.concatenate([l1, l2]))
    ctxs = concat([take(context_rep, rows), take(context_pos, rows)], axis=0)
    neg = generator(users, ctxs).intrinsic
    neg_ci = reshape(neg[: b * big_l], (b, big_l, d))
    neg_cj = reshape(neg[b * big_l:], (b, big_l, d))
    tau = config.temperature
    if config.two_anchor:
        first = info_nce(anchor_in, positive, neg_ci, tau, eps)
        second = info_nce(positive, anchor_in, neg_cj, tau, eps)
        return mean((first + second) * 0.5)
    return mean(info_nce(anchor_in, positive, concat([neg_ci, neg_cj], axis=1), tau, eps))


def split_cicl_batch(net_in, entity_rep: Tensor, anchor_in: Tensor, config: CiclConfig,
                     rng: np.random.Generator, eps: float = 1e-12) -> Tensor:
    """Context-free InfoNCE for the Split variant: views come from dropout on the entity rep."""
    b, d = entity_rep.shape
    big_l = 2 * config.num_negatives
    p = config.split_dropout
    positive = net_in(dropout(entity_rep, p, rng))
    idx = sample_other_indices(b, big_l, rng).reshape(-1)
    neg = reshape(net_in(dropout(take(entity_rep, idx), p, rng)), (b, big_l, d))
    return mean(info_nce(anchor_in, positive, neg, config.temperature, eps))


# -- disentangling --------------------------------------------------------------

class VariationalHead(Module):
    """``q(target | source)`` as a point predictor; log-likelihood is ``-MSE``."""

    def __init__(self, d: int, rng: np.random.Generator, hidden: int = 128):
        self.net = MLP(d, hidden, d, rng)
        self.set_group(THETA)

    def __call__(self, x: Tensor) -> Tensor:
        return self.net(x)


def _row_mse(a: Tensor, b: Tensor) -> Tensor:
    return mse(a, b, axis=-1)


def bi_appr_loss(intrinsic, extrinsic, q1, q2) -> Tensor:
    """``1/2 [MSE(ex, q1(in)) + MSE(in, q2(ex))]`` averaged over the batch."""
    intrinsic, extrinsic = as_tensor(intrinsic), as_tensor(extrinsic)
    return (mean(_row_mse(extrinsic, q1(intrinsic))) + mean(_row_mse(intrinsic, q2(extrinsic)))) * 0.5


def appr_loss(intrinsic, extrinsic, q1) -> Tensor:
    """One-directional approximation loss used with asymmetric vCLUB."""
    return mean(_row_mse(as_tensor(extrinsic), q1(as_tensor(intrinsic))))


def _neg_term(target: Tensor, pred: Tensor, idx: np.ndarray) -> Tensor:
    """Mean over ``k`` of MSE(target_i, pred_r) for ``r = idx[i, :]``; returns ``(B,)``."""
    b, k = idx.shape
    d = target.shape[1]
    pr = reshape(take(pred, idx.reshape(-1)), (b, k, d))
    return mean(mse(reshape(target, (b, 1, d)), pr, axis=-1), axis=1)


def bi_dis_loss(intrinsic, extrinsic, q1, q2, num_negatives: int,
                rng: np.random.Generator) -> Tensor:
    """Bidirectional vCLUB upper bound, batch mean.

    Per sample: ``1/2 [ (a_neg_fwd + a_neg_bwd)/L - (a_pos_fwd + a_pos_bwd) ]`` where the
    negative terms score sample ``i``'s factor against predictions made from other
    samples' factors.
    """
    intrinsic, extrinsic = as_tensor(intrinsic), as_tensor(extrinsic)
    b = intrinsic.shape[0]
    if b < 2:
        raise ValueError("bi_dis_loss needs a batch of at least 2")
    pred_ex, pred_in = q1(intrinsic), q2(extrinsic)
    idx = sample_other_indices(b, num_negatives, rng)
    pos = _row_mse(extrinsic, pred_ex) + _row_mse(intrinsic, pred_in)
    neg = _neg_term(extrinsic, pred_ex, idx) + _neg_term(intrinsic, pred_in, idx)
    return mean(neg - pos) * 0.5


def vclub_loss_asymmetric(intrinsic, extrinsic, q1, num_negatives: int,
                          rng: np.random.Generator) -> Tensor:
    """One-directional vCLUB (``q1: in -> ex`` only)."""
    intrinsic, extrinsic = as_tensor(intrinsic), as_tensor(extrinsic)
    b = intrinsic.shape[0]
    if b < 2:
        raise ValueError("vclub_loss_asymmetric needs a batch of at least 2")
    pred_ex = q1(intrinsic)
    idx = sample_other_indices(b, num_negatives, rng)
    return mean(_neg_term(extrinsic, pred_ex, idx) - _row_mse(extrinsic, pred_ex))
