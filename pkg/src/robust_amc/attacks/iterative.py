"""Signed-gradient attacks: FGSM, PGD and the momentum iterative method.

All three work on δ directly and evaluate the loss gradient at ``x + δ``,
starting from ``δ = 0``.  Frames are attacked independently, so a batch
``(N, 2, λ)`` behaves like N single-frame calls.
"""

from __future__ import annotations

import numpy as np

from robust_amc.errors import ShapeError
from robust_amc.models import ModelParams, input_gradients

from .projection import project


def _batch(x: np.ndarray, y: np.ndarray | int) -> tuple[np.ndarray, np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    frames = x[None] if single else x
    labels = np.asarray(y, dtype=np.int64).reshape(-1)
    if frames.ndim != 3 or labels.shape != (frames.shape[0],):
        raise ShapeError(f"{labels.size} labels for frames of shape {x.shape}")
    return frames, labels, single


def _unbatch(delta: np.ndarray, single: bool) -> np.ndarray:
    return delta[0] if single else delta


def fgsm(params: ModelParams, x: np.ndarray, y: np.ndarray | int, eps: float, p: float = np.inf) -> np.ndarray:
    """``δ = ε·sign(∇_x L)``, projected onto the ε-ball when ``p = 2``."""
    frames, labels, single = _batch(x, y)
    g = input_gradients(params, frames, labels)
    return _unbatch(project(eps * np.sign(g), eps, p), single)


def pgd(
    params: ModelParams,
    x: np.ndarray,
    y: np.ndarray | int,
    eps: float,
    alpha: float,
    steps: int,
    p: float = np.inf,
) -> np.ndarray:
    """Projected signed-gradient ascent, ``steps`` iterations of size ``alpha``."""
    if steps < 1:
        raise ValueError("PGD needs at least one step")
    frames, labels, single = _batch(x, y)
    delta = np.zeros_like(frames)
    for _ in range(steps):
        g = input_gradients(params, frames + delta, labels)
        delta = project(delta + alpha * np.sign(g), eps, p)
    return _unbatch(delta, single)


def mim(
    params: ModelParams,
    x: np.ndarray,
    y: np.ndarray | int,
    eps: float,
    alpha: float,
    momentum: float,
    steps: int,
    p: float = np.inf,
) -> np.ndarray:
    """Momentum iterative method.

    The velocity accumulates L1-normalised gradients,
    ``g ← μ·g + ∇/‖∇‖₁``, and each step moves by ``alpha·sign(g)``.  A frame
    whose gradient vanishes keeps its velocity; if the velocity is zero as
    well the step is zero.  The iterate is projected once, at the end.
    """
    if steps < 1:
        raise ValueError("MIM needs at least one step")
    if momentum < 0:
        raise ValueError("momentum must be non-negative")
    frames, labels, single = _batch(x, y)
    delta = np.zeros_like(frames)
    velocity = np.zeros_like(frames)
    for _ in range(steps):
        g = input_gradients(params, frames + delta, labels)
        l1 = np.abs(g).sum(axis=(1, 2), keepdims=True)
        normalised = np.divide(g, l1, out=np.zeros_like(g), where=l1 > 0)
        velocity = momentum * velocity + normalised
        delta = delta + alpha * np.sign(velocity)
    return _unbatch(project(delta, eps, p), single)
