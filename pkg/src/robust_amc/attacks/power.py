"""Power bookkeeping between perturbations and the signal they ride on."""

from __future__ import annotations

import numpy as np

from robust_amc.errors import ChannelError, DegenerateGradientError
from robust_amc.signals import LabeledDataset


def _frames(ref: LabeledDataset | np.ndarray) -> np.ndarray:
    return ref.frames if isinstance(ref, LabeledDataset) else np.asarray(ref, dtype=np.float64)


def mean_power(frames: np.ndarray) -> float:
    """Mean of ``I² + Q²`` over samples and frames."""
    frames = np.asarray(frames, dtype=np.float64)
    return float(np.mean(np.sum(frames * frames, axis=-2)))


def psr_db(delta: np.ndarray, ref: LabeledDataset | np.ndarray) -> float:
    """Perturbation-to-signal ratio ``10·log10(P_δ / P_x)``."""
    return float(10.0 * np.log10(mean_power(delta) / mean_power(_frames(ref))))


def psr_gain(delta: np.ndarray, ref: LabeledDataset | np.ndarray, target_db: float) -> float:
    """Amplitude factor that brings *delta* to *target_db* relative to *ref*."""
    p_x = mean_power(_frames(ref))
    if not p_x > 0:
        raise ChannelError("reference signal has no power")
    p_d = mean_power(delta)
    if p_d == 0:
        raise DegenerateGradientError("cannot rescale a zero perturbation")
    return float(np.sqrt(p_x * 10.0 ** (target_db / 10.0) / p_d))


def scale_to_psr(delta: np.ndarray, ref: LabeledDataset | np.ndarray, target_db: float) -> np.ndarray:
    return np.asarray(delta, dtype=np.float64) * psr_gain(delta, ref, target_db)


def awgn_like(ref: LabeledDataset | np.ndarray, target_db: float, seed: int = 0) -> np.ndarray:
    """White Gaussian noise shaped like *ref*, scaled to exactly *target_db* PSR."""
    frames = _frames(ref)
    noise = np.random.default_rng(seed).standard_normal(frames.shape)
    return scale_to_psr(noise, frames, target_db)
