"""The full attack × substitute task library and its meta-train / meta-test split."""

from __future__ import annotations

import json
import logging

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Literal, Sequence

import numpy as np

from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from robust_amc.attacks import AttackSpec, PerturbationCache
from robust_amc.errors import DatasetFormatError, InsufficientTasksError
from robust_amc.signals import LabeledDataset, dataset_hash, read_dataset, write_dataset

from .task import SplitConfig, Task, generate_task
from .zoo import SubstituteZoo

_LOG = logging.getLogger(__name__)

LIBRARY_MANIFEST = "library.json"
MANIFEST_VERSION = 1


class HoldoutConfig(BaseModel):
    """How meta-test tasks are chosen.

    ``attack`` holds out every task of ``count`` attack methods, ``substitute`` every
    task of ``count`` substitutes, ``pair`` just ``count`` individual
    (attack, substitute) crosses.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["attack", "substitute", "pair"] = "attack"
    count: int = Field(1, ge=1)
    seed: int = 0


@dataclass(frozen=True)
class TaskLibrary:
    tasks: tuple[Task, ...]
    meta_train: tuple[str, ...]
    meta_test: tuple[str, ...]
    holdout: HoldoutConfig = field(default_factory=HoldoutConfig)

    def __post_init__(self) -> None:
        ids = [t.task_id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise InsufficientTasksError(f"duplicate task ids in library: {ids}")
        train, test = set(self.meta_train), set(self.meta_test)
        if train & test:
            raise InsufficientTasksError(f"tasks in both meta-train and meta-test: {sorted(train & test)}")
        if train | test != set(ids):
            raise InsufficientTasksError("meta split does not cover the library")

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[Task]:
        return iter(self.tasks)

    def get(self, tid: str) -> Task:
        for t in self.tasks:
            if t.task_id == tid:
                return t
        raise KeyError(tid)

    def train_tasks(self) -> list[Task]:
        return [self.get(t) for t in self.meta_train]

    def test_tasks(self) -> list[Task]:
        return [self.get(t) for t in self.meta_test]


def meta_split(tasks: Sequence[Task], holdout: HoldoutConfig) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Meta-train and meta-test task ids, both in task-id order.

    ``attack`` mode holds out whole attack methods, so every budget or PSR
    variant of a held-out method lands in meta-test.
    """
    rng = np.random.default_rng(holdout.seed)
    if holdout.mode == "pair":
        ids = sorted(t.task_id for t in tasks)
        if len(ids) <= holdout.count:
            raise InsufficientTasksError(f"{len(ids)} tasks cannot hold out {holdout.count} and still train")
        held_ids = set(rng.choice(ids, size=holdout.count, replace=False).tolist())
        test = tuple(i for i in ids if i in held_ids)
        return tuple(i for i in ids if i not in held_ids), test

    def key(t: Task) -> str:
        return t.attack.method.value if holdout.mode == "attack" else t.substitute_id

    groups = sorted({key(t) for t in tasks})
    if len(groups) <= holdout.count:
        raise InsufficientTasksError(
            f"{len(groups)} distinct {holdout.mode}s cannot hold out {holdout.count} and still train"
        )
    held = set(rng.choice(groups, size=holdout.count, replace=False).tolist())
    ordered = sorted(tasks, key=lambda t: t.task_id)
    train = tuple(t.task_id for t in ordered if key(t) not in held)
    test = tuple(t.task_id for t in ordered if key(t) in held)
    _LOG.info("holding out %s %s: %d meta-train / %d meta-test tasks", holdout.mode, sorted(held), len(train), len(test))
    return train, test


def build_task_library(
    attacks: Sequence[AttackSpec],
    zoo: SubstituteZoo,
    ds: LabeledDataset,
    split: SplitConfig,
    holdout: HoldoutConfig,
    *,
    cache: PerturbationCache | None = None,
    workers: int = 1,
    progress: bool = False,
) -> TaskLibrary:
    """Mint ``|attacks|·|zoo|`` tasks and split them into meta-train and meta-test."""
    if len(attacks) < 1:
        raise InsufficientTasksError("need at least one attack")
    if len(zoo) < 2:
        raise InsufficientTasksError(f"need at least two substitutes, got {len(zoo)}")
    names = [a.name for a in attacks]
    if len(set(names)) != len(names):
        raise InsufficientTasksError(f"attack names must be unique, got {names}")

    jobs = [(a, sid) for a in attacks for sid in zoo.ids]

    def job(item: tuple[AttackSpec, str]) -> Task:
        attack, sid = item
        return generate_task(attack, zoo.get(sid), ds, split, substitute_id=sid, cache=cache)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            minted = list(tqdm(pool.map(job, jobs), total=len(jobs), disable=not progress, desc="tasks"))
    else:
        minted = [job(j) for j in tqdm(jobs, disable=not progress, desc="tasks")]

    tasks = tuple(sorted(minted, key=lambda t: t.task_id))
    train, test = meta_split(tasks, holdout)
    return TaskLibrary(tasks, train, test, holdout)


# --------------------------------------------------------------------------- #
# Manifest
# --------------------------------------------------------------------------- #
def _safe(tid: str) -> str:
    return tid.replace("@", "__").replace("/", "_")


def save_library(lib: TaskLibrary, root: str | Path) -> Path:
    """Write every split as an AMCD file under *root* plus ``library.json``."""
    root = Path(root)
    rows = []
    for t in lib.tasks:
        files, hashes = {}, {}
        for part in ("support", "query", "pool"):
            ds: LabeledDataset = getattr(t, part)
            rel = f"tasks/{_safe(t.task_id)}/{part}.amcd"
            path = write_dataset(ds, root / rel)
            files[part] = rel
            # AMCD stores float32 samples; hash what a reader will see
            hashes[part] = dataset_hash(read_dataset(path))
        rows.append(
            {
                "task_id": t.task_id,
                "attack": t.attack.model_dump(mode="json"),
                "substitute_id": t.substitute_id,
                "split_seed": t.split_seed,
                "support_index": t.support_index.tolist(),
                "query_index": t.query_index.tolist(),
                "files": files,
                "hashes": hashes,
            }
        )
    manifest = {
        "version": MANIFEST_VERSION,
        "holdout": lib.holdout.model_dump(mode="json"),
        "meta_train": list(lib.meta_train),
        "meta_test": list(lib.meta_test),
        "tasks": rows,
    }
    path = root / LIBRARY_MANIFEST
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2))
    _LOG.info("saved %d tasks to %s", len(lib), root)
    return path


def load_library(root: str | Path) -> TaskLibrary:
    """Inverse of :func:`save_library`; every split is hash-verified."""
    root = Path(root)
    manifest = json.loads((root / LIBRARY_MANIFEST).read_text())
    if manifest.get("version") != MANIFEST_VERSION:
        raise DatasetFormatError("version", f"unsupported library manifest version {manifest.get('version')}")
    tasks = []
    for row in manifest["tasks"]:
        parts = {}
        for part, rel in row["files"].items():
            ds = read_dataset(root / rel)
            if dataset_hash(ds) != row["hashes"][part]:
                raise DatasetFormatError("checksum", f"{row['task_id']} {part} does not match its recorded hash")
            parts[part] = ds
        tasks.append(
            Task(
                row["task_id"],
                AttackSpec.model_validate(row["attack"]),
                row["substitute_id"],
                parts["support"],
                parts["query"],
                parts["pool"],
                int(row["split_seed"]),
                np.asarray(row["support_index"], dtype=np.int64),
                np.asarray(row["query_index"], dtype=np.int64),
            )
        )
    return TaskLibrary(
        tuple(tasks),
        tuple(manifest["meta_train"]),
        tuple(manifest["meta_test"]),
        HoldoutConfig.model_validate(manifest["holdout"]),
    )
