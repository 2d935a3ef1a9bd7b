"""Minimal reverse-mode automatic differentiation on float64 numpy arrays.

Every operation builds a node in a computation graph; ``backward`` runs a
topological sort and accumulates gradients into ``Tensor.grad``.  The op
set is exactly what the ranking networks need: matmul, broadcast add,
elementwise mul, scale, transpose, concat, reshape, abs, elu, relu,
row softmax, and mean squared error.
"""

from .tensor import (
    Tensor,
    abs_,
    add,
    backward,
    concat,
    elu,
    matmul,
    mean_squared_error,
    mul,
    no_grad,
    relu,
    reshape,
    scale,
    softmax_rows,
    transpose,
)
from .gradcheck import finite_difference_check
from .io import load_params, save_params
from .optim import Adam, DivergenceError, GradientDescent

__all__ = [
    "Tensor",
    "matmul",
    "add",
    "mul",
    "scale",
    "transpose",
    "concat",
    "reshape",
    "abs_",
    "elu",
    "relu",
    "softmax_rows",
    "mean_squared_error",
    "backward",
    "no_grad",
    "GradientDescent",
    "Adam",
    "DivergenceError",
    "save_params",
    "load_params",
    "finite_difference_check",
]
