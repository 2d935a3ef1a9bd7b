"""Gradient-based optimizers over named parameter tensors.

Parameters are a ``dict[str, Tensor]``; the names make divergence
diagnostics and checkpoints self-describing.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class DivergenceError(RuntimeError):
    """A parameter gradient became NaN or infinite."""

    def __init__(self, param_name: str):
        super().__init__(f"non-finite gradient in parameter {param_name!r}")
        self.param_name = param_name


def _check_finite(params: dict[str, Tensor]):
    for name, p in params.items():
        if not np.isfinite(p.grad).all():
            raise DivergenceError(name)


class GradientDescent:
    """Plain SGD: p <- p - lr * dp."""

    def __init__(self, params: dict[str, Tensor], lr: float):
        if lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.params = dict(params)
        self.lr = float(lr)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        _check_finite(self.params)
        for p in self.params.values():
            p.data -= self.lr * p.grad


class Adam:
    """Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.params = dict(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        _check_finite(self.params)
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            p.data -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
