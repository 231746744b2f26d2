"""Finite-difference verification of the reverse-mode gradients.

Central differences in double precision resolve gradients to roughly
1e-10 absolute for order-one values, so a relative tolerance of 1e-4 has
orders of magnitude of headroom for a correct implementation and fails
loudly for a wrong one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autograd import Tensor, no_grad


@dataclass(frozen=True)
class GradCheckReport:
    """Worst relative error per checked tensor and overall."""

    per_tensor: dict[str, float]
    max_relative_error: float
    step: float

    def ok(self, tolerance: float) -> bool:
        return self.max_relative_error < tolerance


def relative_error(a: float, b: float) -> float:
    """|a - b| scaled by max(|a|, |b|, 1); behaves absolutely near zero."""
    return abs(a - b) / max(abs(a), abs(b), 1.0)


def finite_difference_check(
    make_loss: Callable[[], Tensor],
    tensors: list[tuple[str, Tensor]],
    step: float = 1e-6,
) -> GradCheckReport:
    """Compare analytic gradients of a scalar loss against central differences.

    ``make_loss`` must rebuild the loss from the current tensor contents
    and be deterministic; every entry of every listed tensor is perturbed
    in both directions.
    """
    for _, tensor in tensors:
        tensor.grad = None
    loss = make_loss()
    loss.backward()
    analytic = {name: np.array(t.grad, copy=True) for name, t in tensors}

    per_tensor: dict[str, float] = {}
    for name, tensor in tensors:
        worst = 0.0
        flat = tensor.data.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        for idx in range(flat.size):
            saved = flat[idx]
            with no_grad():
                flat[idx] = saved + step
                upper = float(make_loss().data)
                flat[idx] = saved - step
                lower = float(make_loss().data)
            flat[idx] = saved
            numeric = (upper - lower) / (2.0 * step)
            worst = max(worst, relative_error(float(grad_flat[idx]), numeric))
        per_tensor[name] = worst
    overall = max(per_tensor.values()) if per_tensor else 0.0
    return GradCheckReport(per_tensor=per_tensor, max_relative_error=overall, step=step)
