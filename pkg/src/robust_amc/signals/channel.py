"""Received-signal model ``y = H_t·x + H_a·δ + n`` with flat gains and AWGN."""

from __future__ import annotations

import math

from typing import Literal

import numpy as np

from pydantic import BaseModel, ConfigDict, Field

from robust_amc.errors import ChannelError, ShapeError

from .modulation import IQFrame

SeedLike = int | np.random.SeedSequence | np.random.Generator | None


class ChannelModel(BaseModel):
    """Flat channel gains for the transmitted signal and the perturbation.

    ``awgn`` keeps both gains at exactly 1.  ``flat_fading`` draws each gain
    per frame as ``exp(N(0, fading_sigma²))``, which is strictly positive.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["awgn", "flat_fading"] = "awgn"
    fading_sigma: float = Field(0.25, ge=0.0)

    def sample_gains(self, rng: np.random.Generator) -> tuple[float, float]:
        """Draw ``(H_t, H_a)`` for one frame."""
        if self.kind == "awgn":
            return 1.0, 1.0
        h_t, h_a = np.exp(self.fading_sigma * rng.standard_normal(2))
        return float(h_t), float(h_a)


def _rng(seed: SeedLike) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def apply_channel(
    x: IQFrame,
    channel: ChannelModel,
    snr_db: float,
    rng_seed: SeedLike,
    *,
    perturbation: np.ndarray | None = None,
) -> IQFrame:
    """Pass *x* (and an optional additive *perturbation*) through *channel*.

    Noise is complex white Gaussian with per-component variance ``P_n / 2``
    where ``P_n = P / 10^(snr_db/10)`` and ``P`` is the mean power of
    ``H_t·x``.  ``snr_db = +inf`` disables the noise.
    """
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ChannelError(f"invalid snr_db {snr_db!r}")
    rng = _rng(rng_seed)
    h_t, h_a = channel.sample_gains(rng)

    i = h_t * x.i
    q = h_t * x.q
    p = float(np.mean(i * i + q * q)) if x.length else 0.0
    if not p > 0.0:
        raise ChannelError(f"non-positive signal power {p!r}")

    if perturbation is not None:
        delta = np.asarray(perturbation, dtype=np.float64)
        if delta.shape != (2, x.length):
            raise ShapeError(f"perturbation must be (2, {x.length}), got {delta.shape}")
        i = i + h_a * delta[0]
        q = q + h_a * delta[1]

    if math.isinf(snr_db) and snr_db > 0:
        return IQFrame(i, q)

    sigma = math.sqrt(p / 10.0 ** (snr_db / 10.0) / 2.0)
    noise = rng.normal(0.0, sigma, size=(2, x.length))
    return IQFrame(i + noise[0], q + noise[1])
