"""One adversarial task: an attack crossed with a substitute, split into support and query."""

from __future__ import annotations

import logging

from dataclasses import dataclass, field

import numpy as np

from pydantic import BaseModel, ConfigDict, Field

from robust_amc.attacks import AttackSpec, Perturbation, PerturbationCache, craft
from robust_amc.core.utils import derive_seed
from robust_amc.errors import ShapeError
from robust_amc.models import ModelParams
from robust_amc.signals import LabeledDataset

_LOG = logging.getLogger(__name__)


class SplitConfig(BaseModel):
    """Class-balanced support/query sizes; leftover frames go to the pool."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    support_per_class: int = Field(5, ge=1)
    query_per_class: int = Field(15, ge=1)
    seed: int = 0


def task_id(attack: AttackSpec, substitute_id: str) -> str:
    return f"{attack.name}@{substitute_id}"


@dataclass(frozen=True, eq=False)
class Task:
    task_id: str
    attack: AttackSpec
    substitute_id: str
    support: LabeledDataset
    query: LabeledDataset
    pool: LabeledDataset
    split_seed: int
    support_index: np.ndarray = field(repr=False)
    query_index: np.ndarray = field(repr=False)

    @property
    def method(self) -> str:
        return self.attack.method.value

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Task):
            return NotImplemented
        return (
            self.task_id == other.task_id
            and self.attack == other.attack
            and self.substitute_id == other.substitute_id
            and self.split_seed == other.split_seed
            and self.support == other.support
            and self.query == other.query
            and self.pool == other.pool
        )

    def __repr__(self) -> str:
        return f"<Task {self.task_id} support={len(self.support)} query={len(self.query)} pool={len(self.pool)}>"


def split_indices(labels: np.ndarray, n_classes: int, cfg: SplitConfig, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Support, query and pool frame indices, each sorted, pairwise disjoint."""
    rng = np.random.default_rng(seed)
    need = cfg.support_per_class + cfg.query_per_class
    support, query, pool = [], [], []
    for c in range(n_classes):
        members = np.flatnonzero(labels == c)
        if members.size < need:
            raise ShapeError(f"class {c} has {members.size} frames, split needs {need}")
        members = rng.permutation(members)
        support.append(members[: cfg.support_per_class])
        query.append(members[cfg.support_per_class : need])
        pool.append(members[need:])
    return tuple(np.sort(np.concatenate(part)) for part in (support, query, pool))  # type: ignore[return-value]


def generate_task(
    attack: AttackSpec,
    substitute: ModelParams,
    ds: LabeledDataset,
    split: SplitConfig,
    *,
    substitute_id: str | None = None,
    cache: PerturbationCache | None = None,
) -> Task:
    """Perturb every clean frame with *attack* crafted on *substitute*, then split.

    Labels are those of the clean frames.  The split is seeded by
    ``(split.seed, task id)`` so every task gets its own partition.
    """
    sid = substitute_id or substitute.model_id
    if sid is None:
        raise ValueError("substitute needs a model id")
    tid = task_id(attack, sid)
    pert: Perturbation = (
        cache.get_or_craft(attack, substitute, ds, substitute_id=sid)
        if cache is not None
        else craft(attack, substitute, ds, substitute_id=sid)
    )
    perturbed = pert.apply_to(ds)
    seed = derive_seed(split.seed, tid)
    s_idx, q_idx, p_idx = split_indices(ds.labels, ds.n_classes, split, seed)
    _LOG.debug("task %s: support %d, query %d, pool %d", tid, s_idx.size, q_idx.size, p_idx.size)
    return Task(
        tid,
        attack,
        sid,
        perturbed.subset(s_idx),
        perturbed.subset(q_idx),
        perturbed.subset(p_idx),
        seed,
        s_idx,
        q_idx,
    )
