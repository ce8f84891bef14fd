"""Substitute models the black-box attacker crafts perturbations against."""

from __future__ import annotations

import json
import logging

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from pydantic import BaseModel, ConfigDict, Field, field_validator
from sklearn.model_selection import train_test_split

from robust_amc.errors import DatasetFormatError, ShapeError
from robust_amc.models import (
    PRESETS,
    Architecture,
    ModelParams,
    TrainConfig,
    accuracy,
    init_model,
    model_hash,
    preset,
    read_checkpoint,
    train,
    write_checkpoint,
)
from robust_amc.signals import LabeledDataset

_LOG = logging.getLogger(__name__)

ZOO_MANIFEST = "zoo.json"


class SubstituteSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    model_id: str = Field(min_length=1)
    arch: str = "mlp_small"
    seed: int = 0

    @field_validator("arch")
    @classmethod
    def _known_preset(cls, v: str) -> str:
        if v not in PRESETS:
            raise ValueError(f"unknown architecture preset {v!r}; choose from {sorted(PRESETS)}")
        return v


class ZooSpec(BaseModel):
    """Which substitutes to train and how.

    ``holdout_fraction`` of the clean data is kept aside to measure each
    substitute's clean accuracy; a substitute below ``min_accuracy`` is
    logged as a warning.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    substitutes: tuple[SubstituteSpec, ...]
    train: TrainConfig = TrainConfig()
    holdout_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    min_accuracy: float = Field(0.7, ge=0.0, le=1.0)
    workers: int = Field(1, ge=1)

    @field_validator("substitutes")
    @classmethod
    def _ids_unique(cls, v: tuple[SubstituteSpec, ...]) -> tuple[SubstituteSpec, ...]:
        if not v:
            raise ValueError("the zoo needs at least one substitute")
        ids = [s.model_id for s in v]
        if len(set(ids)) != len(ids):
            raise ValueError(f"substitute ids must be unique, got {ids}")
        return v

    @classmethod
    def cycle(cls, n: int, archs: tuple[str, ...] = ("mlp_small", "cnn1d_lite", "mlp_wide"), **kwargs) -> "ZooSpec":
        """``n`` substitutes ``s0..s{n-1}`` cycling through *archs* with seeds ``0..n-1``."""
        subs = tuple(SubstituteSpec(model_id=f"s{k}", arch=archs[k % len(archs)], seed=k) for k in range(n))
        return cls(substitutes=subs, **kwargs)


@dataclass(frozen=True)
class SubstituteEntry:
    model_id: str
    arch: Architecture
    seed: int
    checkpoint_hash: str
    clean_accuracy: float = float("nan")
    path: Path | None = field(default=None, compare=False)


@dataclass
class SubstituteZoo:
    """Trained substitutes keyed by model id, in configured order."""

    entries: tuple[SubstituteEntry, ...]
    models: dict[str, ModelParams] = field(repr=False)

    def __post_init__(self) -> None:
        ids = [e.model_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ShapeError(f"duplicate substitute ids {ids}")
        missing = set(ids) - set(self.models)
        if missing:
            raise ShapeError(f"no parameters for substitutes {sorted(missing)}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[SubstituteEntry]:
        return iter(self.entries)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.model_id for e in self.entries)

    def get(self, model_id: str) -> ModelParams:
        return self.models[model_id]

    def entry(self, model_id: str) -> SubstituteEntry:
        for e in self.entries:
            if e.model_id == model_id:
                return e
        raise KeyError(model_id)

    def verify(self) -> None:
        """Raise ``checksum`` if any model no longer matches its recorded hash."""
        for e in self.entries:
            found = model_hash(self.models[e.model_id])
            if found != e.checkpoint_hash:
                raise DatasetFormatError("checksum", f"substitute {e.model_id} hash {found} != {e.checkpoint_hash}")

    def save(self, root: str | Path) -> Path:
        root = Path(root)
        rows = []
        for e in self.entries:
            path = write_checkpoint(self.models[e.model_id], root / f"{e.model_id}.amcm", {"seed": e.seed})
            rows.append(
                {
                    "model_id": e.model_id,
                    "seed": e.seed,
                    "checkpoint": path.name,
                    "checkpoint_hash": e.checkpoint_hash,
                    "clean_accuracy": None if np.isnan(e.clean_accuracy) else e.clean_accuracy,
                }
            )
        manifest = root / ZOO_MANIFEST
        manifest.write_text(json.dumps({"substitutes": rows}, indent=2))
        return manifest

    @classmethod
    def load(cls, root: str | Path) -> "SubstituteZoo":
        root = Path(root)
        rows = json.loads((root / ZOO_MANIFEST).read_text())["substitutes"]
        entries, models = [], {}
        for row in rows:
            path = root / row["checkpoint"]
            params, _ = read_checkpoint(path)
            acc = row.get("clean_accuracy")
            entries.append(
                SubstituteEntry(
                    row["model_id"],
                    params.arch,
                    int(row["seed"]),
                    row["checkpoint_hash"],
                    float("nan") if acc is None else float(acc),
                    path,
                )
            )
            models[row["model_id"]] = params
        zoo = cls(tuple(entries), models)
        zoo.verify()
        return zoo


def _split_clean(ds: LabeledDataset, fraction: float, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    if fraction == 0:
        return ds, LabeledDataset.empty(ds.length, ds.class_names)
    idx = np.arange(len(ds))
    fit_idx, held_idx = train_test_split(idx, test_size=fraction, random_state=seed, stratify=ds.labels)
    return ds.subset(np.sort(fit_idx)), ds.subset(np.sort(held_idx))


def train_substitutes(
    ds: LabeledDataset,
    spec: ZooSpec,
    *,
    out_dir: str | Path | None = None,
    progress: bool = False,
) -> SubstituteZoo:
    """Train every substitute independently on *ds*; optionally persist checkpoints.

    A diverging substitute propagates :class:`TrainingDivergedError` tagged with its id.
    """
    fit, held = _split_clean(ds, spec.holdout_fraction, spec.train.seed)

    def job(sub: SubstituteSpec) -> tuple[SubstituteEntry, ModelParams]:
        arch = preset(sub.arch, ds.n_classes, input_length=ds.length)
        params = init_model(arch, seed=sub.seed, model_id=sub.model_id)
        cfg = spec.train.model_copy(update={"seed": sub.seed})
        trained, _ = train(params, fit, cfg, progress=progress)
        acc = accuracy(trained, held)
        if len(held) and acc < spec.min_accuracy:
            _LOG.warning("substitute %s clean accuracy %.3f below %.2f", sub.model_id, acc, spec.min_accuracy)
        else:
            _LOG.info("substitute %s clean accuracy %.3f", sub.model_id, acc)
        return SubstituteEntry(sub.model_id, arch, sub.seed, model_hash(trained), acc), trained

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(job, spec.substitutes))
    else:
        results = [job(s) for s in spec.substitutes]

    zoo = SubstituteZoo(tuple(e for e, _ in results), {e.model_id: p for e, p in results})
    if out_dir is not None:
        zoo.save(out_dir)
        entries = tuple(replace(e, path=Path(out_dir) / f"{e.model_id}.amcm") for e in zoo.entries)
        zoo = SubstituteZoo(entries, zoo.models)
    return zoo
