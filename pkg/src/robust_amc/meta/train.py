"""Offline meta-adversarial training loop."""

from __future__ import annotations

import logging

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tqdm import tqdm

from robust_amc.errors import InsufficientTasksError, TrainingDivergedError
from robust_amc.models import ModelParams, init_model, preset
from robust_amc.tasks import TaskLibrary

from .config import MetaAlgorithm, MetaConfig
from .loss import LossFn, classifier_loss
from .outer import OuterStep, TaskPair, fomaml_outer_step, maml_outer_step, reptile_outer_step

_LOG = logging.getLogger(__name__)

_STEPS = {
    MetaAlgorithm.MAML: maml_outer_step,
    MetaAlgorithm.FOMAML: fomaml_outer_step,
    MetaAlgorithm.REPTILE: reptile_outer_step,
}


@dataclass(frozen=True)
class MetaResult:
    """Meta-learned parameters and the per-outer-step meta-loss.

    The meta-loss is the mean query loss after adaptation for MAML and
    FOMAML, and the mean support loss after adaptation for Reptile.
    """

    params: ModelParams
    trace: list[float] = field(default_factory=list)


def meta_train_theta(
    theta: np.ndarray,
    tasks: Sequence[TaskPair],
    loss_fn: LossFn,
    cfg: MetaConfig,
    *,
    model_id: str | None = None,
    progress: bool = False,
) -> tuple[np.ndarray, list[float]]:
    """Run ``cfg.outer_iters`` outer steps on *tasks*, sampled uniformly with replacement.

    Sampled indices are sorted before each step so the batch sum has a fixed order.
    """
    if not tasks:
        raise InsufficientTasksError("meta-training needs at least one task")
    rng = np.random.default_rng(cfg.seed)
    step_fn = _STEPS[cfg.algorithm]
    theta = np.array(theta, dtype=np.float64, copy=True)
    trace: list[float] = []

    for it in tqdm(range(cfg.outer_iters), disable=not progress, desc=cfg.algorithm.value):
        idx = np.sort(rng.integers(0, len(tasks), size=cfg.task_batch))
        try:
            out: OuterStep = step_fn(
                theta,
                [tasks[i] for i in idx],
                loss_fn,
                alpha=cfg.inner_lr,
                beta=cfg.outer_lr,
                k=cfg.inner_steps,
                workers=cfg.workers,
            )
        except TrainingDivergedError as exc:
            raise TrainingDivergedError(
                f"inner loop diverged: {exc}", step=it, model_id=model_id, history=trace
            ) from exc
        if not np.isfinite(out.loss) or not np.all(np.isfinite(out.theta)):
            raise TrainingDivergedError(
                f"non-finite meta-loss {out.loss!r}", step=it, model_id=model_id, history=trace
            )
        theta = out.theta
        trace.append(out.loss)
        if (it + 1) % cfg.log_every == 0:
            window = trace[-cfg.log_every :]
            _LOG.info("%s outer %d/%d meta-loss=%.5f", cfg.algorithm.value, it + 1, cfg.outer_iters, float(np.mean(window)))
    return theta, trace


def meta_train(
    lib: TaskLibrary,
    cfg: MetaConfig,
    *,
    init: ModelParams | None = None,
    progress: bool = False,
) -> MetaResult:
    """Meta-train a classifier on the meta-train tasks of *lib*."""
    train_tasks = lib.train_tasks()
    if not train_tasks:
        raise InsufficientTasksError("library has no meta-train tasks")
    if init is None:
        first = train_tasks[0].support
        arch = preset(cfg.arch, first.n_classes, input_length=first.length)
        init = init_model(arch, seed=cfg.seed, model_id=f"meta-{cfg.algorithm.value}")
    _LOG.info(
        "meta-training %s on %d tasks: %d outer steps, batch %d, k=%d",
        cfg.algorithm.value,
        len(train_tasks),
        cfg.outer_iters,
        cfg.task_batch,
        cfg.inner_steps,
    )
    pairs = [(t.support, t.query) for t in train_tasks]
    theta, trace = meta_train_theta(
        init.theta, pairs, classifier_loss(init.arch), cfg, model_id=init.model_id, progress=progress
    )
    return MetaResult(init.with_theta(theta), trace)
