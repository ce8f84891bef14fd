"""Comparison models and the checkpoint wrapper every trained model is stored in."""

from __future__ import annotations

import logging

from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from pathlib import Path
from typing import Any

from robust_amc.errors import InsufficientTasksError
from robust_amc.models import (
    Architecture,
    ModelParams,
    TrainConfig,
    init_model,
    read_checkpoint,
    train,
    write_checkpoint,
)
from robust_amc.signals import LabeledDataset
from robust_amc.tasks import Task, TaskLibrary

from .config import MetaConfig

_LOG = logging.getLogger(__name__)


class Baseline(str, Enum):
    META = "meta"
    SCRATCH = "scratch"
    TRANSFER_CLEAN = "transfer_clean"
    TRANSFER_ADVERSARIAL = "transfer_adversarial"


def scratch_model(arch: Architecture, seed: int = 0) -> ModelParams:
    """Untrained initialisation; adapted online from nothing."""
    return init_model(arch, seed=seed, model_id=Baseline.SCRATCH.value)


def transfer_train(
    ds: LabeledDataset,
    arch: Architecture,
    cfg: TrainConfig,
    *,
    model_id: str = Baseline.TRANSFER_CLEAN.value,
    progress: bool = False,
) -> ModelParams:
    """Conventional full training of a fresh model on *ds*."""
    params = init_model(arch, seed=cfg.seed, model_id=model_id)
    trained, _ = train(params, ds, cfg, progress=progress)
    return trained


def _whole(task: Task) -> LabeledDataset:
    return task.support.concat(task.query).concat(task.pool)


def adversarial_training_set(lib: TaskLibrary, cfg: MetaConfig) -> tuple[LabeledDataset, list[str]]:
    """Perturbed frames Transfer-Adversarial trains on, and the ids of the tasks used.

    ``single`` takes the first meta-train task of ``cfg.transfer_attack``
    (default: the first meta-train task); ``mixture`` pools every meta-train task.
    """
    train_tasks = lib.train_tasks()
    if not train_tasks:
        raise InsufficientTasksError("library has no meta-train tasks")
    if cfg.transfer_mode == "mixture":
        chosen = train_tasks
    else:
        if cfg.transfer_attack is None:
            chosen = train_tasks[:1]
        else:
            chosen = [t for t in train_tasks if t.attack.name == cfg.transfer_attack][:1]
            if not chosen:
                raise InsufficientTasksError(f"no meta-train task uses attack {cfg.transfer_attack!r}")
    ds = reduce(LabeledDataset.concat, (_whole(t) for t in chosen))
    return ds, [t.task_id for t in chosen]


def transfer_adversarial(
    lib: TaskLibrary,
    arch: Architecture,
    train_cfg: TrainConfig,
    meta_cfg: MetaConfig,
    *,
    progress: bool = False,
) -> ModelParams:
    ds, used = adversarial_training_set(lib, meta_cfg)
    _LOG.info("Transfer-Adversarial trains on %d frames from %s", len(ds), used)
    return transfer_train(ds, arch, train_cfg, model_id=Baseline.TRANSFER_ADVERSARIAL.value, progress=progress)


@dataclass(frozen=True)
class Checkpoint:
    """Parameters tagged with the baseline they belong to."""

    params: ModelParams
    kind: Baseline
    metadata: dict[str, Any] = field(default_factory=dict)

    def save(self, path: str | Path) -> Path:
        return write_checkpoint(self.params, path, {**self.metadata, "kind": self.kind.value})

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        params, meta = read_checkpoint(path)
        kind = Baseline(meta.pop("kind", Baseline.META.value))
        meta.pop("model_id", None)
        return cls(params, kind, meta)
