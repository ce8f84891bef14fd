"""Loss callables ``loss(theta, data) -> scalar Tensor`` the meta-learners optimise."""

from __future__ import annotations

from typing import Any, Callable

import numpy as np

from robust_amc.autodiff import GradientTape, Tensor, ops
from robust_amc.models import Architecture, forward_logits
from robust_amc.signals import LabeledDataset

LossFn = Callable[[Tensor, Any], Tensor]


def classifier_loss(arch: Architecture) -> LossFn:
    """Mean cross-entropy of the classifier *arch* on a :class:`LabeledDataset`."""

    def loss(theta: Tensor, data: LabeledDataset) -> Tensor:
        return ops.softmax_cross_entropy(forward_logits(arch, theta, Tensor(data.frames)), data.labels)

    return loss


def quadratic_loss(theta: Tensor, target: Any) -> Tensor:
    """``½‖θ − t‖²``."""
    d = ops.sub(theta, Tensor(np.asarray(target, dtype=np.float64)))
    return ops.scale(ops.reduce_sum(ops.mul(d, d)), 0.5)


def value_and_grad(loss_fn: LossFn, theta: np.ndarray, data: Any) -> tuple[float, np.ndarray]:
    t = Tensor(theta)
    with GradientTape() as tape:
        tape.watch(t)
        value = loss_fn(t, data)
    (g,) = tape.gradient(value, [t])
    return value.item(), g.numpy()


def loss_value(loss_fn: LossFn, theta: np.ndarray, data: Any) -> float:
    return loss_fn(Tensor(theta), data).item()
