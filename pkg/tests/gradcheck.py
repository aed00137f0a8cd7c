"""Finite-difference gradient suite over every differentiable op."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from iedr import diffcore as dc
from oracles import central_difference, relative_error

N_SHAPES = 20
TOL = 1e-4


def _shape(rng, ndim_lo=1, ndim_hi=3, lo=1, hi=5):
    return tuple(int(v) for v in rng.integers(lo, hi, size=rng.integers(ndim_lo, ndim_hi + 1)))


def _away_from_zero(rng, shape, margin=0.1):
    x = rng.standard_normal(shape)
    return np.where(np.abs(x) < margin, np.sign(x + 1e-300) * margin + x, x)


def _cases(rng):
    """Yield (op name, list of input arrays, function of input tensors)."""
    s = _shape(rng)
    yield "add", [rng.standard_normal(s), rng.standard_normal(s[-1:])], lambda a, b: dc.add(a, b)
    yield "sub", [rng.standard_normal(s), rng.standard_normal((1,) * len(s))], lambda a, b: dc.sub(a, b)
    yield "mul", [rng.standard_normal(s), rng.standard_normal(s)], lambda a, b: dc.mul(a, b)
    yield "div", [rng.standard_normal(s), rng.uniform(0.5, 2.0, s) * rng.choice([-1, 1], s)], \
        lambda a, b: dc.div(a, b)
    yield "power", [rng.uniform(0.5, 2.0, s)], lambda a: dc.power(a, 2.5)
    yield "square", [rng.standard_normal(s)], lambda a: dc.square(a)
    n, k, m = (int(v) for v in rng.integers(1, 6, size=3))
    yield "matmul", [rng.standard_normal((n, k)), rng.standard_normal((k, m))], lambda a, b: dc.matmul(a, b)
    yield "matmul_batched", [rng.standard_normal((2, n, k)), rng.standard_normal((k, m))], \
        lambda a, b: dc.matmul(a, b)
    yield "relu", [_away_from_zero(rng, s)], lambda a: dc.relu(a)
    yield "exp", [rng.standard_normal(s)], lambda a: dc.exp(a)
    yield "log", [rng.uniform(0.2, 3.0, s)], lambda a: dc.log(a)
    yield "sigmoid", [rng.standard_normal(s) * 3], lambda a: dc.sigmoid(a)
    yield "tanh", [rng.standard_normal(s)], lambda a: dc.tanh(a)
    ax = int(rng.integers(len(s)))
    yield "sum", [rng.standard_normal(s)], lambda a: dc.sum_(a, axis=ax)
    yield "sum_keepdims", [rng.standard_normal(s)], lambda a: dc.sum_(a, axis=ax, keepdims=True)
    yield "mean", [rng.standard_normal(s)], lambda a: dc.mean(a, axis=ax)
    yield "mean_all", [rng.standard_normal(s)], lambda a: dc.mean(a)
    yield "logsumexp", [rng.standard_normal(s) * 2], lambda a: dc.logsumexp(a, axis=ax)
    yield "reshape", [rng.standard_normal(s)], lambda a: dc.reshape(a, (-1,))
    yield "getitem_basic", [rng.standard_normal(s)], lambda a: dc.getitem(a, (Ellipsis, slice(0, 1)))
    rows = rng.integers(0, s[0], size=7)
    yield "getitem_fancy", [rng.standard_normal(s)], lambda a: dc.getitem(a, rows)
    yield "take", [rng.standard_normal((s[0] + 1, 3))], lambda a: dc.take(a, rng_take(rows, s[0] + 1))
    yield "concat", [rng.standard_normal(s), rng.standard_normal(s)], lambda a, b: dc.concat([a, b], axis=ax)
    v = (int(rng.integers(1, 4)), int(rng.integers(2, 6)))
    yield "cosine_sim", [rng.standard_normal(v), rng.standard_normal(v)], lambda a, b: dc.cosine_sim(a, b)
    yield "cosine_sim_bcast", [rng.standard_normal((v[0], 1, v[1])), rng.standard_normal((v[0], 3, v[1]))], \
        lambda a, b: dc.cosine_sim(a, b)
    mask_rng = int(rng.integers(1 << 30))
    yield "dropout", [rng.standard_normal(s)], \
        lambda a: dc.dropout(a, 0.3, np.random.default_rng(mask_rng))
    yield "mse", [rng.standard_normal(s), rng.standard_normal(s)], lambda a, b: dc.mse(a, b)
    yield "mse_axis", [rng.standard_normal(s), rng.standard_normal(s)], lambda a, b: dc.mse(a, b, axis=-1)
    labels = rng.integers(0, 2, size=s).astype(np.float64)
    yield "bce", [rng.uniform(0.05, 0.95, s)], lambda p: dc.binary_cross_entropy(p, labels)


def rng_take(rows, n):
    return np.asarray(rows) % n


@dataclass
class GradResult:
    op: str
    trial: int
    error: float


def check_case(inputs, fn, weight_seed: int) -> float:
    """Worst relative error over inputs of d(sum(fn * R))/d(input)."""
    ts = [dc.Tensor(x.copy(), requires_grad=True) for x in inputs]
    out = fn(*ts)
    r = np.random.default_rng(weight_seed).standard_normal(out.shape)
    dc.backward(dc.sum_(dc.mul(out, r)))
    worst = 0.0
    for k, x in enumerate(inputs):
        def f(v, k=k):
            args = [dc.Tensor(v if j == k else inputs[j]) for j in range(len(inputs))]
            with dc.no_grad():
                return float((fn(*args).data * r).sum())
        worst = max(worst, relative_error(ts[k].grad, central_difference(f, x)))
    return worst


def random_graph(rng):
    """Five-layer composite: affine -> tanh -> affine -> relu/sigmoid mix -> logsumexp."""
    n, d, h = 4, 5, 6
    x = rng.standard_normal((n, d))
    w1, w2 = rng.standard_normal((d, h)) * 0.5, rng.standard_normal((h, d)) * 0.5
    b1 = rng.standard_normal(h)

    def fn(x, w1, b1, w2):
        z = dc.tanh(dc.add(dc.matmul(x, w1), b1))
        z = dc.matmul(z, w2)
        z = dc.mul(dc.sigmoid(z), dc.exp(dc.mul(z, 0.3)))
        return dc.logsumexp(z, axis=1)

    return [x, w1, b1, w2], fn


def run_suite(n_shapes: int = N_SHAPES, seed: int = 0) -> tuple[list[GradResult], float]:
    started = time.perf_counter()
    results = []
    for trial in range(n_shapes):
        rng = np.random.default_rng([seed, trial])
        for op, inputs, fn in _cases(rng):
            results.append(GradResult(op, trial, check_case(inputs, fn, trial)))
        inputs, fn = random_graph(rng)
        results.append(GradResult("graph5", trial, check_case(inputs, fn, trial)))
    return results, time.perf_counter() - started
