"""Inner loop: full-batch SGD on a support set, offline and online."""

from __future__ import annotations

import logging
import time

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from robust_amc.errors import ShapeError, TrainingDivergedError
from robust_amc.models import ModelParams
from robust_amc.signals import LabeledDataset

from .loss import LossFn, classifier_loss, value_and_grad

_LOG = logging.getLogger(__name__)


def inner_adapt(
    theta: np.ndarray,
    support: Any,
    loss_fn: LossFn,
    alpha: float,
    k: int,
    *,
    model_id: str | None = None,
) -> tuple[np.ndarray, list[float]]:
    """``k`` steps of ``θ′ ← θ′ − α∇L_support(θ′)``; returns ``θ′`` and the loss before each step.

    *theta* is never modified.
    """
    if k < 0:
        raise ValueError("inner steps must be non-negative")
    adapted = np.array(theta, dtype=np.float64, copy=True)
    trace: list[float] = []
    for step in range(k):
        loss, g = value_and_grad(loss_fn, adapted, support)
        if not np.isfinite(loss) or not np.all(np.isfinite(g)):
            raise TrainingDivergedError(
                f"non-finite support loss {loss!r}", step=step, model_id=model_id, history=trace
            )
        trace.append(loss)
        adapted = adapted - alpha * g
    return adapted, trace


@dataclass(frozen=True)
class AdaptResult:
    params: ModelParams
    trace: list[float] = field(default_factory=list)
    shots: int = 0
    seconds: float = 0.0


def online_adapt(
    params: ModelParams,
    support: LabeledDataset | None,
    alpha: float,
    k: int,
) -> AdaptResult:
    """Online phase: only the inner loop runs, on a few labelled frames.

    An empty (or missing) support set is the zero-shot case and returns
    *params* untouched.
    """
    start = time.perf_counter()
    if support is None or len(support) == 0:
        return AdaptResult(params, [], 0, time.perf_counter() - start)
    if support.length != params.arch.input_length or support.n_classes != params.arch.n_classes:
        raise ShapeError(f"support {support!r} does not fit {params!r}")
    theta, trace = inner_adapt(
        params.theta, support, classifier_loss(params.arch), alpha, k, model_id=params.model_id
    )
    shots = int(support.class_counts().max())
    seconds = time.perf_counter() - start
    _LOG.debug("adapted %r on %d frames in %.4fs", params, len(support), seconds)
    return AdaptResult(params.with_theta(theta), trace, shots, seconds)
