from .tensor import (
    DomainError,
    ShapeError,
    Tensor,
    add,
    as_tensor,
    backward,
    binary_cross_entropy,
    concat,
    cosine_sim,
    div,
    dropout,
    exp,
    getitem,
    is_grad_enabled,
    log,
    logsumexp,
    matmul,
    mean,
    mse,
    mul,
    no_grad,
    power,
    relu,
    reshape,
    sigmoid,
    square,
    sub,
    sum_,
    take,
    tanh,
)
from .nn import MLP, OMEGA, THETA, Embedding, Linear, Module, Parameter
from .optim import SGD, Adam, make_optimizer
from .rng import Streams, substream
from .checkpoint import CheckpointError, load_checkpoint, read_manifest, save_checkpoint

__all__ = [
    "Adam", "CheckpointError", "DomainError", "Embedding", "Linear", "MLP", "Module",
    "OMEGA", "Parameter", "SGD", "ShapeError", "Streams", "THETA", "Tensor", "add",
    "as_tensor", "backward", "binary_cross_entropy", "concat", "cosine_sim", "div",
    "dropout", "exp", "getitem", "is_grad_enabled", "load_checkpoint", "log", "logsumexp",
    "make_optimizer", "matmul", "mean", "mse", "mul", "no_grad", "power", "read_manifest",
    "relu", "reshape", "save_checkpoint", "sigmoid", "square", "sub", "substream", "sum_",
    "take", "tanh",
]
