"""Carlini & Wagner L2 attack without box constraint.

Minimises ``‖δ‖₂² + c·max(z_y − max_{i≠y} z_i, 0)`` per frame by plain
gradient descent from ``δ = 0``.  I/Q samples are unbounded, so no
change of variables is applied.
"""

from __future__ import annotations

import logging

import numpy as np

from robust_amc.autodiff import GradientTape, Tensor, ops
from robust_amc.models import ModelParams, argmax_class, forward_logits

from .iterative import _batch, _unbatch
from .projection import project

_LOG = logging.getLogger(__name__)

_MASK = -1e30


def _objective(
    params: ModelParams, frames: np.ndarray, labels: np.ndarray, delta: np.ndarray, c: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-frame objective, its gradient in δ and whether the label flipped."""
    n = frames.shape[0]
    rows = np.arange(n)
    mask = _MASK * ops.one_hot(labels, params.arch.n_classes)
    d = Tensor(delta)
    with GradientTape() as tape:
        tape.watch(d)
        z = forward_logits(params.arch, Tensor(params.theta), ops.add(Tensor(frames), d))
        margin = ops.sub(ops.getitem(z, (rows, labels)), ops.reduce_max(ops.add(z, Tensor(mask)), axis=1))
        hinge = ops.relu(margin)
        total = ops.add(ops.reduce_sum(ops.mul(d, d)), ops.scale(ops.reduce_sum(hinge), c))
    (g,) = tape.gradient(total, [d])

    obj = np.sum(delta * delta, axis=(1, 2)) + c * hinge.numpy()
    flipped = argmax_class(z.numpy()) != labels
    return obj, g.numpy(), flipped


def cw_l2(
    params: ModelParams,
    x: np.ndarray,
    y: np.ndarray | int,
    c: float = 1.0,
    lr: float = 0.01,
    steps: int = 100,
    eps: float | None = None,
) -> np.ndarray:
    """Best δ per frame: the lowest-objective iterate that flips the label, else the last one.

    With ``eps`` set the result is projected onto the L2 ball of that radius.
    """
    if steps < 1:
        raise ValueError("C&W needs at least one step")
    if c < 0:
        raise ValueError("c must be non-negative")
    frames, labels, single = _batch(x, y)
    delta = np.zeros_like(frames)
    best = np.zeros_like(frames)
    best_obj = np.full(frames.shape[0], np.inf)

    for t in range(steps + 1):
        obj, g, flipped = _objective(params, frames, labels, delta, c)
        better = flipped & (obj < best_obj)
        best[better] = delta[better]
        best_obj[better] = obj[better]
        if t == steps:
            break
        delta = delta - lr * g

    found = np.isfinite(best_obj)
    best[~found] = delta[~found]
    _LOG.debug("C&W flipped %d/%d frames", int(found.sum()), frames.shape[0])
    if eps is not None:
        best = project(best, eps, 2.0)
    return _unbatch(best, single)
