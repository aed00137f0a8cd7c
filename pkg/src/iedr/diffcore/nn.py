"""Parameters, modules and the few layers the model is assembled from."""
from __future__ import annotations

from typing import Iterator

import numpy as np

from .tensor import Tensor, matmul, relu, take

THETA = "theta"
OMEGA = "omega"


class Parameter(Tensor):
    """A trainable leaf tensor; ``group`` picks the optimizer that owns it."""

    __slots__ = ("group",)

    def __init__(self, data, group: str = OMEGA):
        super().__init__(np.asarray(data), requires_grad=True)
        self.group = group


class Module:
    """Container whose parameters are discovered from attributes.

    Parameter names are dotted attribute paths, e.g. ``user_encoder.h.fc1.weight``.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def set_group(self, group: str) -> None:
        for p in self.parameters():
            p.group = group

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        extra = set(state) - set(params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(extra)}")
        for name, p in params.items():
            arr = np.asarray(state[name])
            if arr.shape != p.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {p.shape}")
            p.data = arr.astype(p.dtype, copy=True)
            p.zero_grad()

    def astype(self, dtype) -> "Module":
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.zero_grad()
        return self


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Linear(Module):
    """Affine map ``x @ W + b`` with ``W`` stored as (in_features, out_features)."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 bias: bool = True):
        self.weight = Parameter(xavier_uniform(rng, in_features, out_features))
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = matmul(x, self.weight)
        if self.bias is not None:
            out = out + self.bias
        return out


class MLP(Module):
    """One hidden layer with ReLU: ``fc2(relu(fc1(x)))``."""

    def __init__(self, in_features: int, hidden: int, out_features: int,
                 rng: np.random.Generator):
        self.fc1 = Linear(in_features, hidden, rng)
        self.fc2 = Linear(hidden, out_features, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(relu(self.fc1(x)))


class Embedding(Module):
    """Lookup table; ``init="uniform"`` draws U(-1/sqrt(d), 1/sqrt(d)), ``"normal"`` draws N(0, 1)."""

    def __init__(self, num: int, dim: int, rng: np.random.Generator, init: str = "uniform"):
        shape = (max(num, 1), dim)
        if init == "uniform":
            bound = 1.0 / np.sqrt(dim)
            table = rng.uniform(-bound, bound, size=shape)
        elif init == "normal":
            table = rng.standard_normal(shape)
        else:
            raise ValueError(f"unknown embedding init {init!r}")
        self.weight = Parameter(table)

    def __call__(self, ids) -> Tensor:
        return take(self.weight, ids)
