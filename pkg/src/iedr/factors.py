"""Factor generator ``f_ie``: (entity rep, context rep) -> (intrinsic, extrinsic).

Variants
--------
Nonlinear   MLP(combine(u, c)) -> 2d, the shipping default
Linear      W [u, c] -> 2d, no activation (falls into the additive trivial solution)
LinearReLU  relu(W [u, c]) -> 2d, the minimal non-additive counterpart of Linear
Split       intrinsic = MLP_1(u), extrinsic = MLP_2(combine(u, c))
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .diffcore import MLP, Linear, Module, Tensor, add, concat, getitem, mul, relu

FACTOR_VARIANTS = ("Nonlinear", "Linear", "LinearReLU", "Split")
COMBINES = ("product", "sum", "concat")


@dataclass(frozen=True)
class FactorConfig:
    variant: str = "Nonlinear"
    combine: str = "product"
    hidden_dim: int = 128

    def __post_init__(self):
        if self.variant not in FACTOR_VARIANTS:
            raise ValueError(f"unknown factor variant {self.variant!r}")
        if self.combine not in COMBINES:
            raise ValueError(f"unknown combine {self.combine!r}")
        if self.variant in ("Linear", "LinearReLU") and self.combine != "concat":
            # The linear diagnostics are defined on the concatenation only.
            object.__setattr__(self, "combine", "concat")


class FactorPair(NamedTuple):
    intrinsic: Tensor
    extrinsic: Tensor


def combine(u: Tensor, c: Tensor, how: str) -> Tensor:
    if u.shape != c.shape:
        raise ValueError(f"combine: entity {u.shape} and context {c.shape} differ")
    if how == "product":
        return mul(u, c)
    if how == "sum":
        return add(u, c)
    return concat([u, c], axis=-1)


def split_halves(out: Tensor, d: int) -> FactorPair:
    return FactorPair(getitem(out, (Ellipsis, slice(0, d))),
                      getitem(out, (Ellipsis, slice(d, 2 * d))))


class FactorGenerator(Module):
    def __init__(self, d: int, config: FactorConfig, rng: np.random.Generator):
        self.d = d
        self.config = config
        in_dim = 2 * d if config.combine == "concat" else d
        v = config.variant
        if v == "Nonlinear":
            self.net = MLP(in_dim, config.hidden_dim, 2 * d, rng)
        elif v in ("Linear", "LinearReLU"):
            self.net = Linear(2 * d, 2 * d, rng)
        else:
            self.net_in = MLP(d, config.hidden_dim, d, rng)
            self.net_ex = MLP(in_dim, config.hidden_dim, d, rng)

    def __call__(self, u: Tensor, c: Tensor) -> FactorPair:
        if u.shape[-1] != self.d or c.shape[-1] != self.d:
            raise ValueError(f"factor generator expects dim {self.d}, got {u.shape} and {c.shape}")
        v = self.config.variant
        if v == "Split":
            return FactorPair(self.net_in(u), self.net_ex(combine(u, c, self.config.combine)))
        out = self.net(combine(u, c, self.config.combine))
        if v == "LinearReLU":
            out = relu(out)
        return split_halves(out, self.d)

    def input_weight(self) -> np.ndarray:
        """The (2d, 2d) matrix with rows [user; context] and columns [intrinsic, extrinsic]."""
        if self.config.variant not in ("Linear", "LinearReLU"):
            raise ValueError(f"variant {self.config.variant} has no single input-weight matrix")
        return self.net.weight.data


def generate_factors(entity_rep: Tensor, context_rep: Tensor, generator: FactorGenerator) -> FactorPair:
    return generator(entity_rep, context_rep)


class BlockMasses(NamedTuple):
    user_intrinsic: float
    user_extrinsic: float
    context_intrinsic: float
    context_extrinsic: float

    @property
    def user_ratio(self) -> float:
        """user->extrinsic over user->intrinsic; small values signal the trivial solution."""
        return self.user_extrinsic / self.user_intrinsic if self.user_intrinsic > 0 else float("nan")


def weight_block_masses(weight) -> BlockMasses:
    """Mean absolute weight of the four (input block -> output half) quadrants."""
    if isinstance(weight, FactorGenerator):
        weight = weight.input_weight()
    w = np.abs(np.asarray(weight, dtype=np.float64))
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2:
        raise ValueError(f"expected a (2d, 2d) weight matrix, got {w.shape}")
    d = w.shape[0] // 2
    return BlockMasses(float(w[:d, :d].mean()), float(w[:d, d:].mean()),
                       float(w[d:, :d].mean()), float(w[d:, d:].mean()))


def write_block_masses_csv(path, rows: list[tuple[str, BlockMasses]]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["label", *BlockMasses._fields])
        for label, m in rows:
            out.writerow([label, *(repr(x) for x in m)])
