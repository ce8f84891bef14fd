"""Universal perturbation along the first principal component of input gradients."""

from __future__ import annotations

import logging

import numpy as np

from robust_amc.errors import DegenerateGradientError, ShapeError
from robust_amc.models import ModelParams, batch_loss, input_gradients
from robust_amc.signals import LabeledDataset

_LOG = logging.getLogger(__name__)


def gradient_matrix(params: ModelParams, ds: LabeledDataset, batch_size: int = 256) -> np.ndarray:
    """Row k is ``∇_x L`` of frame k flattened and scaled to unit L2 norm.

    Frames with a zero gradient are dropped.
    """
    chunks = [
        input_gradients(params, ds.frames[s : s + batch_size], ds.labels[s : s + batch_size])
        for s in range(0, len(ds), batch_size)
    ]
    g = np.concatenate(chunks).reshape(len(ds), -1)
    n = np.linalg.norm(g, axis=1)
    keep = n > 0
    if not keep.any():
        raise DegenerateGradientError("degenerate gradient matrix: every input gradient is zero")
    if not keep.all():
        _LOG.debug("dropping %d frames with zero gradient", int((~keep).sum()))
    return g[keep] / n[keep, None]


def principal_direction(
    g: np.ndarray, *, seed: int = 0, max_iter: int = 100, tol: float = 1e-10
) -> np.ndarray:
    """Leading eigenvector of ``GᵀG`` by power iteration, unit norm."""
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or not np.any(g):
        raise DegenerateGradientError("degenerate gradient matrix")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.shape[1])
    v /= np.linalg.norm(v)
    for it in range(max_iter):
        w = g.T @ (g @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            raise DegenerateGradientError("power iteration collapsed to zero")
        w /= nw
        change = np.linalg.norm(w - v)
        v = w
        if change < tol:
            _LOG.debug("power iteration converged after %d iterations", it + 1)
            break
    return v


def pca_attack(
    params: ModelParams, ds: LabeledDataset, eps: float, *, seed: int = 0, batch_size: int = 256
) -> np.ndarray:
    """``δ = ±ε·v₁`` of shape ``(2, λ)``; the sign maximising mean loss over *ds* wins, ``+`` on ties."""
    if len(ds) < 2:
        raise ShapeError(f"PCA attack needs at least 2 frames, got {len(ds)}")
    v = principal_direction(gradient_matrix(params, ds, batch_size), seed=seed)
    delta = eps * v.reshape(2, ds.length)
    plus = float(np.mean(batch_loss(params, ds.frames + delta, ds.labels)))
    minus = float(np.mean(batch_loss(params, ds.frames - delta, ds.labels)))
    return delta if plus >= minus else -delta
