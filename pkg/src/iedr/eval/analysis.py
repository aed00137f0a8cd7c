"""Representation export, intrinsic/extrinsic matching scores and disentanglement checks."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, replace
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.stats import kendalltau

from ..cied import ProbeConfig, probe_club, probe_mine
from ..data import Batch, Instance

FACTOR_LABELS = ("intrinsic", "extrinsic")


def _factor_arrays(model, instances: Sequence[Instance], side: str) -> tuple[np.ndarray, np.ndarray]:
    if side not in ("user", "item"):
        raise ValueError(f"side must be 'user' or 'item', got {side!r}")
    fu, fv = model.factors(Batch.from_instances(list(instances)))
    pair = fu if side == "user" else fv
    return (np.asarray(pair.intrinsic.data, dtype=np.float64),
            np.asarray(pair.extrinsic.data, dtype=np.float64))


def export_representations(model, instances: Sequence[Instance], which: str = "both",
                           side: str = "user", path=None) -> list[list]:
    """Rows ``[instance_id, side, factor, v_0, ..., v_{d-1}]``; optionally written as CSV."""
    if which not in ("intrinsic", "extrinsic", "both"):
        raise ValueError(f"which must be intrinsic, extrinsic or both, got {which!r}")
    o_in, o_ex = _factor_arrays(model, instances, side)
    labels = FACTOR_LABELS if which == "both" else (which,)
    rows = []
    for i in range(len(instances)):
        for label in labels:
            vec = o_in[i] if label == "intrinsic" else o_ex[i]
            rows.append([i, side, label, *vec.tolist()])
    if path is not None:
        d = o_in.shape[1]
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["instance_id", "side", "factor", *(f"v{j}" for j in range(d))])
            for r in rows:
                out.writerow([*r[:3], *(repr(x) for x in r[3:])])
    return rows


def read_representations(path) -> list[list]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [[int(r[0]), r[1], r[2], *map(float, r[3:])] for r in reader]


@dataclass
class ContextScores:
    context: tuple[int, ...]
    item_keys: list[str]
    intrinsic: np.ndarray
    extrinsic: np.ndarray

    def top(self, factor: str, k: int = 100) -> list[str]:
        s = self.intrinsic if factor == "intrinsic" else self.extrinsic
        order = np.argsort(-s, kind="stable")[:min(k, len(s))]
        return [self.item_keys[i] for i in order]


def matching_scores(model, user_feats: tuple[int, ...], contexts: Sequence[tuple[int, ...]],
                    items: Sequence[tuple[str, tuple[int, ...]]]) -> list[ContextScores]:
    """Per context: ``o_in^u . o_in^v`` and ``o_ex^u . o_ex^v`` for every listed item."""
    keys = [k for k, _ in items]
    out = []
    for ctx in contexts:
        insts = [Instance(tuple(user_feats), tuple(f), tuple(ctx), 0, "u", k) for k, f in items]
        fu, fv = model.factors(Batch.from_instances(insts))
        s_in = (fu.intrinsic.data * fv.intrinsic.data).sum(axis=1).astype(np.float64)
        s_ex = (fu.extrinsic.data * fv.extrinsic.data).sum(axis=1).astype(np.float64)
        out.append(ContextScores(tuple(ctx), keys, s_in, s_ex))
    return out


def top_k_kendall(a: np.ndarray, b: np.ndarray, k: int = 100) -> float:
    """Kendall tau of two score vectors over the top ``k`` items of each (averaged both ways)."""
    taus = []
    for x, y in ((a, b), (b, a)):
        top = np.argsort(-x, kind="stable")[:min(k, len(x))]
        if np.ptp(x[top]) == 0 or np.ptp(y[top]) == 0:
            taus.append(1.0 if np.allclose(x[top], y[top]) else 0.0)
        else:
            taus.append(kendalltau(x[top], y[top]).statistic)
    return float(np.mean(taus))


def matching_consistency(model, users: Sequence[tuple[int, ...]], contexts: Sequence[tuple[int, ...]],
                         items: Sequence[tuple[str, tuple[int, ...]]], k: int = 100,
                         max_pairs: int | None = None) -> dict[str, float]:
    """Mean cross-context Kendall tau of the top-``k`` intrinsic and extrinsic score lists."""
    pairs = list(combinations(range(len(contexts)), 2))
    if max_pairs is not None:
        pairs = pairs[:max_pairs]
    tin, tex = [], []
    for u in users:
        tables = matching_scores(model, u, contexts, items)
        for i, j in pairs:
            tin.append(top_k_kendall(tables[i].intrinsic, tables[j].intrinsic, k))
            tex.append(top_k_kendall(tables[i].extrinsic, tables[j].extrinsic, k))
    return {"kendall_intrinsic": float(np.mean(tin)), "kendall_extrinsic": float(np.mean(tex))}


def linear_probe_accuracy(x: np.ndarray, labels: np.ndarray, rng: np.random.Generator,
                          holdout: float = 0.5, ridge: float = 1e-3) -> float:
    """Held-out accuracy of a one-vs-rest least-squares classifier."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    classes, y = np.unique(labels, return_inverse=True)
    perm = rng.permutation(len(x))
    cut = int(round(len(x) * (1.0 - holdout)))
    tr, te = perm[:cut], perm[cut:]
    mu, sd = x[tr].mean(axis=0), x[tr].std(axis=0)
    sd = np.where(sd > 1e-12, sd, 1.0)
    feats = np.hstack([(x - mu) / sd, np.ones((len(x), 1))])
    target = np.eye(len(classes))[y]
    a = feats[tr]
    w = np.linalg.solve(a.T @ a + ridge * np.eye(a.shape[1]), a.T @ target[tr])
    return float(np.mean(np.argmax(feats[te] @ w, axis=1) == y[te]))


def cross_context_cosine(vectors: np.ndarray) -> float:
    """Mean pairwise cosine between one entity's vectors under different contexts.

    ``vectors`` is ``(n_entities, n_contexts, d)``.
    """
    v = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    unit = v / np.where(norms > 0, norms, 1.0)
    gram = np.einsum("ecd,efd->ecf", unit, unit)
    c = v.shape[1]
    off = (gram.sum(axis=(1, 2)) - np.trace(gram, axis1=1, axis2=2)) / (c * (c - 1))
    return float(off.mean())


@dataclass
class DisentanglementReport:
    mine_intrinsic: float
    mine_extrinsic: float
    club_intrinsic: float
    club_extrinsic: float
    probe_acc_intrinsic: float
    probe_acc_extrinsic: float
    cosine_intrinsic: float
    cosine_extrinsic: float

    def to_dict(self) -> dict:
        return asdict(self)


def user_context_grid(model, users: Sequence[tuple[int, ...]], contexts: Sequence[tuple[int, ...]],
                      item_feats: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """User-side factors for every (user, context) pair: two arrays ``(n_users, n_contexts, d)``.

    User-side factors do not depend on the item, so any item fills the slot.
    """
    insts = [Instance(tuple(u), tuple(item_feats), tuple(c), 0, "u", "i") for u in users for c in contexts]
    o_in, o_ex = _factor_arrays(model, insts, "user")
    shape = (len(users), len(contexts), -1)
    return o_in.reshape(shape), o_ex.reshape(shape)


def within_user_residuals(vectors: np.ndarray) -> np.ndarray:
    """Subtract each user's mean over contexts, in units of the factor's overall RMS.

    ``vectors`` is ``(n_users, n_contexts, d)``. What remains is the part of
    the factor that moves with context for a fixed user; the common scale
    keeps a small wobble small instead of inflating it to unit variance.
    """
    v = np.asarray(vectors, dtype=np.float64)
    rms = np.sqrt(np.mean(v ** 2))
    res = v - v.mean(axis=1, keepdims=True)
    return res / rms if rms > 0 else res


def disentanglement_report(model, users: Sequence[tuple[int, ...]], contexts: Sequence[tuple[int, ...]],
                           item_feats: tuple[int, ...], probe: ProbeConfig = ProbeConfig(),
                           seed: int = 0, within_user: bool = True) -> DisentanglementReport:
    """MI probes, context-id linear probes and cross-context cosines for user-side factors.

    Users and contexts form a full grid, so the context id is independent of
    the user. With ``within_user`` the probes see :func:`within_user_residuals`
    rather than raw factors, since user identity otherwise dominates every
    factor and swamps the context signal at this sample size.
    """
    o_in, o_ex = user_context_grid(model, users, contexts, item_feats)
    n_u, n_c, d = o_in.shape
    ctx_id = np.tile(np.arange(n_c), n_u)
    onehot = np.eye(n_c)[ctx_id]
    if within_user:
        flat_in = within_user_residuals(o_in).reshape(-1, d)
        flat_ex = within_user_residuals(o_ex).reshape(-1, d)
        probe = replace(probe, standardize=False)
    else:
        flat_in, flat_ex = o_in.reshape(-1, d), o_ex.reshape(-1, d)
    rng = np.random.default_rng(seed)
    return DisentanglementReport(
        probe_mine(flat_in, onehot, probe), probe_mine(flat_ex, onehot, probe),
        probe_club(flat_in, onehot, probe), probe_club(flat_ex, onehot, probe),
        linear_probe_accuracy(flat_in, ctx_id, rng), linear_probe_accuracy(flat_ex, ctx_id, rng),
        cross_context_cosine(o_in), cross_context_cosine(o_ex),
    )
