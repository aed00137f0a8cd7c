"""Mutual-information probes used for verification only (never for training).

Both probes fit on one half of the samples and report the bound on the other
half, so a critic that memorises noise cannot manufacture information.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..diffcore import (
    MLP,
    Adam,
    Tensor,
    backward,
    exp,
    logsumexp,
    mean,
    no_grad,
    reshape,
    square,
    sub,
    tanh,
)


@dataclass(frozen=True)
class ProbeConfig:
    hidden: int = 64
    epochs: int = 300
    lr: float = 5e-3
    holdout: float = 0.5
    standardize: bool = True
    seed: int = 0


def _prepare(a, b, cfg: ProbeConfig) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a.reshape(len(a), -1)
    b = b.reshape(len(b), -1)
    if len(a) != len(b) or len(a) < 4:
        raise ValueError("probes need at least 4 paired samples")
    if cfg.standardize:
        a, b = _zscore(a), _zscore(b)
    return a, b


def _zscore(x: np.ndarray) -> np.ndarray:
    sd = x.std(axis=0)
    return np.where(sd > 1e-12, (x - x.mean(axis=0)) / np.where(sd > 1e-12, sd, 1.0), 0.0)


def _halves(n: int, frac: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n)
    cut = int(round(n * (1.0 - frac)))
    return perm[:cut], perm[cut:]


def _dv_bound(critic, a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> Tensor:
    """Donsker-Varadhan bound ``E_joint[T] - log E_marg[exp T]`` with a shuffled marginal."""
    n = len(a)
    joint = critic(Tensor(np.concatenate([a, b], axis=1)))
    marg = critic(Tensor(np.concatenate([a, b[rng.permutation(n)]], axis=1)))
    return sub(mean(joint), logsumexp(reshape(marg, (n,)), axis=0) - np.log(n))


def probe_mine(a, b, config: ProbeConfig = ProbeConfig()) -> float:
    """MINE lower-bound estimate of I(A; B) in nats."""
    a, b = _prepare(a, b, config)
    rng = np.random.default_rng(config.seed)
    critic = MLP(a.shape[1] + b.shape[1], config.hidden, 1, rng)
    opt = Adam(critic.parameters(), lr=config.lr)
    tr, te = _halves(len(a), config.holdout, rng)
    for _ in range(config.epochs):
        opt.zero_grad()
        backward(-_dv_bound(critic, a[tr], b[tr], rng))
        opt.step()
    with no_grad():
        est = [_dv_bound(critic, a[te], b[te], rng).item() for _ in range(8)]
    return float(np.mean(est))


class _GaussianHead:
    """``q(b | a) = N(mu(a), diag exp(logvar(a)))`` with a tanh-bounded log-variance."""

    def __init__(self, da: int, db: int, hidden: int, rng: np.random.Generator):
        self.mu = MLP(da, hidden, db, rng)
        self.logvar = MLP(da, hidden, db, rng)

    def parameters(self):
        return self.mu.parameters() + self.logvar.parameters()

    def __call__(self, a: Tensor) -> tuple[Tensor, Tensor]:
        return self.mu(a), tanh(self.logvar(a))


def probe_club(a, b, config: ProbeConfig = ProbeConfig()) -> float:
    """CLUB upper-bound estimate of I(A; B) in nats.

    The negative term averages over all ``(i, j)`` pairs of the held-out half,
    which for a Gaussian head reduces to per-dimension second moments of ``b``.
    """
    a, b = _prepare(a, b, config)
    rng = np.random.default_rng(config.seed)
    head = _GaussianHead(a.shape[1], b.shape[1], config.hidden, rng)
    opt = Adam(head.parameters(), lr=config.lr)
    tr, te = _halves(len(a), config.holdout, rng)
    at, bt = Tensor(a[tr]), Tensor(b[tr])
    for _ in range(config.epochs):
        opt.zero_grad()
        mu, lv = head(at)
        nll = mean(square(sub(bt, mu)) * exp(-lv) + lv)
        backward(nll)
        opt.step()
    with no_grad():
        mu, lv = head(Tensor(a[te]))
    mu, var = mu.data, np.exp(lv.data)
    be = b[te]
    pos = -((be - mu) ** 2) / (2 * var)
    neg = -(be.var(axis=0) + (be.mean(axis=0) - mu) ** 2) / (2 * var)
    return float((pos - neg).sum(axis=1).mean())


PROBES = {"mine": probe_mine, "club": probe_club}


def write_probe_rows(path, rows: list[tuple[str, str, float]]) -> None:
    """CSV rows ``probe, pair, estimate, unit``."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["probe", "pair", "estimate", "unit"])
        for probe, pair, est in rows:
            out.writerow([probe, pair, repr(float(est)), "nats"])
