"""Outer updates of MAML, first-order MAML and Reptile over a batch of tasks.

A task is a ``(support, query)`` pair of whatever data the loss callable
accepts.  Per-task results are summed in batch order, so running tasks on
several threads does not change the outcome.
"""

from __future__ import annotations

import logging

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Sequence, TypeVar

import numpy as np

from robust_amc.autodiff import GradientTape, Tensor, ops
from robust_amc.errors import ShapeError

from .inner import inner_adapt
from .loss import LossFn, loss_value, value_and_grad

_LOG = logging.getLogger(__name__)

TaskPair = tuple[Any, Any]
_T = TypeVar("_T")


@dataclass(frozen=True)
class OuterStep:
    """New θ, the averaged update direction and the mean meta-loss of the batch."""

    theta: np.ndarray
    direction: np.ndarray
    loss: float


def _map(fn: Callable[[TaskPair], _T], batch: Sequence[TaskPair], workers: int) -> list[_T]:
    if not batch:
        raise ShapeError("task batch is empty")
    if workers > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, batch))
    return [fn(t) for t in batch]


def maml_meta_gradient(
    theta: np.ndarray, support: Any, query: Any, loss_fn: LossFn, alpha: float, k: int
) -> tuple[np.ndarray, float]:
    """Exact ``∇_θ L_query(θ′(θ))`` through ``k`` unrolled inner steps."""
    t = Tensor(theta)
    with GradientTape(higher_order=True) as tape:
        tape.watch(t)
        adapted = t
        for _ in range(k):
            inner = loss_fn(adapted, support)
            (g,) = tape.gradient(inner, [adapted], strict=True)
            adapted = ops.sub(adapted, ops.scale(g, alpha))
        outer = loss_fn(adapted, query)
    (meta,) = tape.gradient(outer, [t], strict=True)
    return meta.numpy(), outer.item()


def fomaml_meta_gradient(
    theta: np.ndarray, support: Any, query: Any, loss_fn: LossFn, alpha: float, k: int
) -> tuple[np.ndarray, float]:
    """``∇_{θ′} L_query(θ′)``, used as if it were the gradient at θ."""
    adapted, _ = inner_adapt(theta, support, loss_fn, alpha, k)
    loss, g = value_and_grad(loss_fn, adapted, query)
    return g, loss


def _gradient_step(
    theta: np.ndarray,
    batch: Sequence[TaskPair],
    loss_fn: LossFn,
    alpha: float,
    beta: float,
    k: int,
    meta_gradient: Callable[..., tuple[np.ndarray, float]],
    workers: int,
) -> OuterStep:
    results = _map(lambda task: meta_gradient(theta, task[0], task[1], loss_fn, alpha, k), batch, workers)
    direction = np.zeros_like(theta, dtype=np.float64)
    total = 0.0
    for g, loss in results:
        direction = direction + g
        total += loss
    direction = direction / len(results)
    return OuterStep(theta - beta * direction, direction, total / len(results))


def maml_outer_step(
    theta: np.ndarray,
    batch: Sequence[TaskPair],
    loss_fn: LossFn,
    *,
    alpha: float,
    beta: float,
    k: int,
    workers: int = 1,
) -> OuterStep:
    """``θ* = θ − β·mean_τ ∇_θ L_query,τ(θ′_τ)`` with the second-order term kept."""
    return _gradient_step(theta, batch, loss_fn, alpha, beta, k, maml_meta_gradient, workers)


def fomaml_outer_step(
    theta: np.ndarray,
    batch: Sequence[TaskPair],
    loss_fn: LossFn,
    *,
    alpha: float,
    beta: float,
    k: int,
    workers: int = 1,
) -> OuterStep:
    return _gradient_step(theta, batch, loss_fn, alpha, beta, k, fomaml_meta_gradient, workers)


def reptile_outer_step(
    theta: np.ndarray,
    batch: Sequence[TaskPair],
    loss_fn: LossFn,
    *,
    alpha: float,
    beta: float,
    k: int,
    workers: int = 1,
) -> OuterStep:
    """``θ* = θ + β·mean_τ(θ′_τ − θ)``; query sets are ignored.

    The reported loss is the support loss after adaptation.
    """
    if k < 1:
        raise ValueError("Reptile needs at least one inner step")

    def one(task: TaskPair) -> tuple[np.ndarray, float]:
        adapted, _ = inner_adapt(theta, task[0], loss_fn, alpha, k)
        return adapted - theta, loss_value(loss_fn, adapted, task[0])

    results = _map(one, batch, workers)
    direction = np.zeros_like(theta, dtype=np.float64)
    total = 0.0
    for d, loss in results:
        direction = direction + d
        total += loss
    direction = direction / len(results)
    return OuterStep(theta + beta * direction, direction, total / len(results))
