"""Online-phase evaluation: few-shot adaptation, 0-shot generalisation, sample efficiency, timing."""

from __future__ import annotations

import logging
import time

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence, TypeVar

import numpy as np
import pandas as pd

from sklearn.metrics import accuracy_score

from robust_amc.core import PhaseRecord, RunTracker
from robust_amc.core.utils import derive_seed
from robust_amc.errors import ShapeError, ShotCountError, TimingLogError
from robust_amc.meta import AdaptResult, Baseline, MetaConfig, online_adapt
from robust_amc.models import ModelParams, TrainConfig, predict_batch, train
from robust_amc.signals import LabeledDataset
from robust_amc.tasks import Task
from robust_amc.writers import read_run_log

from .config import EvalConfig, baseline_kind
from .report import EvalReport, SERCell, TimingRow

_LOG = logging.getLogger(__name__)

_T = TypeVar("_T")
_R = TypeVar("_R")


def evaluate_ser(params: ModelParams, ds: LabeledDataset) -> float:
    """Fraction of frames in *ds* the model misclassifies."""
    if len(ds) == 0:
        raise ShapeError("cannot evaluate SER on an empty dataset")
    if ds.length != params.arch.input_length or ds.n_classes != params.arch.n_classes:
        raise ShapeError(f"{ds!r} does not fit {params!r}")
    return 1.0 - float(accuracy_score(ds.labels, predict_batch(params, ds.frames)))


def take_shots(ds: LabeledDataset, shots: int, seed: int) -> LabeledDataset:
    """Class-balanced support of ``shots`` frames per class, drawn without replacement.

    Indices are returned in dataset order so the draw does not depend on the
    order classes are visited in.
    """
    if shots < 0:
        raise ShotCountError(f"shot count must be non-negative, got {shots}")
    if shots == 0:
        return ds.subset([])
    counts = ds.class_counts()
    if shots > counts.min():
        raise ShotCountError(
            f"{shots}-shot support needs {shots} frames per class; the smallest class has {int(counts.min())}"
        )
    rng = np.random.default_rng(seed)
    picked = [
        rng.choice(np.flatnonzero(ds.labels == c), size=shots, replace=False) for c in range(ds.n_classes)
    ]
    return ds.subset(np.sort(np.concatenate(picked)))


def shot_source(task: Task) -> LabeledDataset:
    """Frames few-shot supports are drawn from: the support set followed by the pool, never the query."""
    return task.support.concat(task.pool)


def shot_limit(task: Task) -> int:
    """Largest per-class shot count *task* can supply."""
    return int(shot_source(task).class_counts().min())


@dataclass(frozen=True)
class AdaptRule:
    """How each baseline uses the shots.

    Meta and transfer baselines run the meta inner loop (``lr``, ``steps``);
    Scratch trains from its initialisation with ``scratch_train``.
    """

    lr: float
    steps: int
    scratch_train: TrainConfig

    @classmethod
    def from_config(cls, meta: MetaConfig, eval_cfg: EvalConfig) -> "AdaptRule":
        return cls(meta.adapt_lr, meta.adapt_steps, eval_cfg.scratch_train)

    def apply(self, label: str, params: ModelParams, support: LabeledDataset, seed: int) -> AdaptResult:
        if baseline_kind(label) is not Baseline.SCRATCH:
            return online_adapt(params, support, self.lr, self.steps)
        if len(support) == 0:
            return AdaptResult(params, [], 0, 0.0)
        start = time.perf_counter()
        trained, history = train(params, support, self.scratch_train.model_copy(update={"seed": seed}))
        shots = int(support.class_counts().max())
        return AdaptResult(trained, history, shots, time.perf_counter() - start)


def _map(fn: Callable[[_T], _R], items: Sequence[_T], workers: int) -> list[_R]:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


@dataclass(frozen=True)
class _Cell:
    label: str
    task: Task
    shots: int
    seed: int

    @property
    def key(self) -> tuple[str, str, int, int]:
        return (self.label, self.task.task_id, self.shots, self.seed)


def _run_cell(
    cell: _Cell,
    checkpoints: Mapping[str, ModelParams],
    rule: AdaptRule,
    tracker: RunTracker | None,
) -> SERCell:
    # every baseline sees the same support for a given (task, shots, seed)
    support = take_shots(shot_source(cell.task), cell.shots, derive_seed(cell.seed, cell.task.task_id, cell.shots))
    result = rule.apply(cell.label, checkpoints[cell.label], support, cell.seed)
    ser = evaluate_ser(result.params, cell.task.query)
    if tracker is not None:
        tracker.record(
            "online",
            "scratch_train" if baseline_kind(cell.label) is Baseline.SCRATCH else "online_adapt",
            result.seconds,
            baseline=cell.label,
            task_id=cell.task.task_id,
            shots=cell.shots,
            seed=cell.seed,
        )
    _LOG.debug("%s %s %d-shot seed=%d SER=%.4f", cell.label, cell.task.task_id, cell.shots, cell.seed, ser)
    return SERCell(
        baseline=cell.label,
        task_id=cell.task.task_id,
        attack=cell.task.attack.name,
        substitute=cell.task.substitute_id,
        shots=cell.shots,
        seed=cell.seed,
        ser=ser,
        online_seconds=result.seconds,
    )


def repeat_seeds(seed: int, repeats: int) -> tuple[int, ...]:
    return tuple(seed + r for r in range(repeats))


def few_shot_eval(
    checkpoints: Mapping[str, ModelParams],
    tasks: Sequence[Task],
    shots: Iterable[int],
    repeats: int = 5,
    *,
    rule: AdaptRule,
    seed: int = 0,
    tracker: RunTracker | None = None,
    workers: int = 1,
    experiment_id: str = "few-shot",
    config_hash: str = "",
) -> EvalReport:
    """SER of every checkpoint after adapting on ``shots`` frames per class of each task.

    Each (baseline, task, shots, seed) cell draws its support from the
    task's support and pool frames and is scored on ``task.query``.
    ``shots=0`` scores the checkpoint as deployed.  Cells run independently
    and the report lists them sorted by key.
    """
    shot_list = sorted(set(shots))
    if not tasks:
        raise ShapeError("few-shot evaluation needs at least one meta-test task")
    if not checkpoints:
        raise ShapeError("few-shot evaluation needs at least one checkpoint")
    if not shot_list:
        raise ShotCountError("shot list is empty")
    smallest = min(shot_limit(t) for t in tasks)
    if shot_list[-1] > smallest:
        raise ShotCountError(f"{shot_list[-1]}-shot evaluation exceeds the {smallest} support and pool frames per class")

    seeds = repeat_seeds(seed, repeats)
    cells = sorted(
        (_Cell(label, task, k, s) for label in checkpoints for task in tasks for k in shot_list for s in seeds),
        key=lambda c: c.key,
    )
    _LOG.info(
        "evaluating %d baselines x %d tasks x %d shot counts x %d seeds",
        len(checkpoints),
        len(tasks),
        len(shot_list),
        len(seeds),
    )
    results = _map(lambda c: _run_cell(c, checkpoints, rule, tracker), cells, workers)
    return EvalReport(
        experiment_id=experiment_id,
        config_hash=config_hash,
        cells=tuple(results),
        seeds=seeds,
    )


def sample_efficiency(
    checkpoints: Mapping[str, ModelParams],
    task: Task,
    target_ser: float,
    shot_grid: Iterable[int],
    *,
    rule: AdaptRule,
    repeats: int = 5,
    seed: int = 0,
) -> dict[str, int | None]:
    """Smallest grid shot count at which each baseline's mean SER reaches *target_ser*.

    ``None`` marks a baseline that never reaches it on the grid.  Every grid
    point must fit the task's support and pool frames per class.
    """
    grid = sorted(set(shot_grid))
    if not grid:
        raise ShotCountError("shot grid is empty")
    limit = shot_limit(task)
    if grid[-1] > limit:
        raise ShotCountError(
            f"{grid[-1]}-shot grid point exceeds the {limit} support and pool frames per class of {task.task_id}"
        )

    seeds = repeat_seeds(seed, repeats)
    reached: dict[str, int | None] = {}
    for label in checkpoints:
        reached[label] = None
        for k in grid:
            cells = [_run_cell(_Cell(label, task, k, s), checkpoints, rule, None) for s in seeds]
            mean = float(np.mean([c.ser for c in cells]))
            _LOG.debug("%s %d-shot mean SER %.4f (target %.4f)", label, k, mean, target_ser)
            if mean <= target_ser:
                reached[label] = k
                break
    if all(v is None for v in reached.values()):
        _LOG.warning("no baseline reaches SER %.4f on grid %s", target_ser, grid)
    return reached


def _load_records(logs: str | Path | Iterable[PhaseRecord] | Iterable[str | Path]) -> list[PhaseRecord]:
    if isinstance(logs, (str, Path)):
        return read_run_log(logs)
    records: list[PhaseRecord] = []
    for item in logs:
        if isinstance(item, PhaseRecord):
            records.append(item)
        else:
            records.extend(read_run_log(item))
    return records


def timing_report(logs: str | Path | Iterable[PhaseRecord] | Iterable[str | Path]) -> pd.DataFrame:
    """Per-baseline offline seconds and mean online-adaptation seconds.

    Offline time is the latest offline record of each baseline, or 0 when the
    baseline has none (Scratch).  0-shot adaptations do not count towards the
    online mean.
    """
    records = [r for r in _load_records(logs) if r.baseline is not None]
    offline = [r for r in records if r.phase == "offline"]
    online = [r for r in records if r.phase == "online" and int(r.params.get("shots", 1)) > 0]
    if not offline:
        raise TimingLogError("run log has no offline phase records")
    if not online:
        raise TimingLogError("run log has no online phase records with shots > 0")

    latest_offline = {r.baseline: r.seconds for r in offline}
    online_df = pd.DataFrame({"baseline": [r.baseline for r in online], "seconds": [r.seconds for r in online]})
    online_mean = online_df.groupby("baseline", sort=True)["seconds"].mean()
    labels = sorted(set(latest_offline) | set(online_mean.index))
    return pd.DataFrame(
        {
            "baseline": labels,
            "offline_seconds": [float(latest_offline.get(b, 0.0)) for b in labels],
            "online_seconds": [float(online_mean.get(b, np.nan)) for b in labels],
        }
    )


def timing_rows(table: pd.DataFrame) -> tuple[TimingRow, ...]:
    return tuple(
        TimingRow(baseline=row.baseline, offline_seconds=row.offline_seconds, online_seconds=row.online_seconds)
        for row in table.dropna().itertuples(index=False)
    )


def format_timing_table(table: pd.DataFrame) -> str:
    """Plain-text table; a baseline without an offline phase shows ``-``."""
    shown = pd.DataFrame(
        {
            "baseline": table["baseline"],
            "offline (s)": [f"{v:.3f}" if v > 0 else "-" for v in table["offline_seconds"]],
            "online (s)": [f"{v:.4f}" if np.isfinite(v) else "-" for v in table["online_seconds"]],
        }
    )
    return shown.to_string(index=False)
