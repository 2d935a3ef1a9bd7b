"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, backward, no_grad


def finite_difference_check(
    fn,
    tensors: dict[str, Tensor],
    h: float = 1e-5,
    max_coords_per_tensor: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Return the worst relative error between autodiff and central differences.

    ``fn`` rebuilds a scalar loss from the leaf ``tensors`` on every call;
    each checked coordinate is perturbed by ``+h`` and ``-h`` in place.
    ``max_coords_per_tensor`` caps the number of coordinates sampled per
    tensor (all of them when None); sampling uses ``rng``.
    """
    for t in tensors.values():
        t.zero_grad()
    loss = fn()
    if loss.data.ndim != 0 and loss.data.size != 1:
        raise ValueError(f"loss must be a scalar, got shape {loss.data.shape}")
    backward(loss)
    analytic = {name: t.grad.copy().reshape(-1) for name, t in tensors.items()}

    worst = 0.0
    for name, t in tensors.items():
        flat = t.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords_per_tensor is not None and flat.size > max_coords_per_tensor:
            if rng is None:
                raise ValueError("rng required when subsampling coordinates")
            coords = rng.choice(flat.size, size=max_coords_per_tensor, replace=False)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            with no_grad():
                up = fn().data.item()
            flat[i] = orig - h
            with no_grad():
                down = fn().data.item()
            flat[i] = orig
            fd = (up - down) / (2.0 * h)
            a = float(analytic[name][i])
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-6)
            worst = max(worst, rel)
    return worst
