from __future__ import annotations

import numpy as np


def _rows(delta: np.ndarray) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    return delta.reshape(1 if delta.ndim == 2 else delta.shape[0], -1)


def frame_norms(delta: np.ndarray, p: float) -> np.ndarray:
    """``‖δ_k‖_p`` for every frame; a universal δ yields one entry."""
    return np.linalg.norm(_rows(delta), ord=p, axis=1)


def project(delta: np.ndarray, eps: float, p: float) -> np.ndarray:
    """Nearest point of the per-frame ε-ball: clamp for p=∞, radial rescale for p=2."""
    delta = np.asarray(delta, dtype=np.float64)
    if p == np.inf:
        return np.clip(delta, -eps, eps)
    if p != 2:
        raise ValueError(f"unsupported norm order {p}")
    n = frame_norms(delta, 2)
    factor = np.where(n > eps, eps / np.where(n > 0, n, 1.0), 1.0)
    if delta.ndim == 2:
        return delta * factor[0]
    return delta * factor[:, None, None]
