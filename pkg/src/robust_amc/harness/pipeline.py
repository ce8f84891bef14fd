"""Offline → online pipeline stages behind the CLI subcommands.

Every stage reads its inputs from a work directory, writes its artifacts
there, times itself on a :class:`RunTracker` and records input / output
hashes in ``manifest.json``.
"""

from __future__ import annotations

import json
import logging

from dataclasses import dataclass
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Iterable

import pandas as pd

from robust_amc.attacks import PerturbationCache
from robust_amc.core import PhaseRecord, RunTracker
from robust_amc.core.utils import hash_bytes, hash_file, utc_now_iso
from robust_amc.errors import ConfigError, InsufficientTasksError, TimingLogError
from robust_amc.meta import (
    Baseline,
    Checkpoint,
    MetaAlgorithm,
    meta_train,
    scratch_model,
    transfer_adversarial,
    transfer_train,
)
from robust_amc.models import ModelParams, preset
from robust_amc.signals import LabeledDataset, dataset_hash, generate_dataset, read_dataset, write_dataset
from robust_amc.tasks import (
    SubstituteZoo,
    TaskLibrary,
    build_task_library,
    load_library,
    save_library,
    train_substitutes,
)
from robust_amc.writers import read_run_log

from .config import AppConfig, baseline_kind
from .evaluation import (
    AdaptRule,
    evaluate_ser,
    few_shot_eval,
    format_timing_table,
    sample_efficiency,
    shot_source,
    take_shots,
    timing_report,
    timing_rows,
)
from .report import EvalReport, read_report, write_report

_LOG = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def tool_version() -> str:
    try:
        return version("robust-amc")
    except PackageNotFoundError:
        return "0+unknown"


def artifact_hash(path: Path) -> str:
    """Hash of a file, or of every file under a directory keyed by relative path."""
    if path.is_file():
        return hash_file(path)
    parts = [f"{p.relative_to(path).as_posix()}:{hash_file(p)}" for p in sorted(path.rglob("*")) if p.is_file()]
    return hash_bytes("\n".join(parts).encode())


@dataclass(frozen=True)
class Workspace:
    """Fixed artifact layout under one work directory."""

    root: Path

    @property
    def data_path(self) -> Path:
        return self.root / "data" / "clean.amcd"

    @property
    def zoo_dir(self) -> Path:
        return self.root / "zoo"

    @property
    def cache_dir(self) -> Path:
        return self.root / "cache"

    @property
    def library_dir(self) -> Path:
        return self.root / "library"

    @property
    def checkpoint_dir(self) -> Path:
        return self.root / "checkpoints"

    @property
    def report_path(self) -> Path:
        return self.root / "reports" / "report.json"

    @property
    def run_log(self) -> Path:
        return self.root / "runlog.jsonl"

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST

    def checkpoint_path(self, label: str) -> Path:
        return self.checkpoint_dir / f"{label}.amcm"

    def adapted_path(self, label: str, task_id: str, shots: int, seed: int) -> Path:
        safe = task_id.replace("@", "__").replace("/", "_")
        return self.root / "adapted" / label / f"{safe}-{shots}shot-s{seed}.amcm"

    def require(self, path: Path, stage: str) -> Path:
        if not path.exists():
            raise FileNotFoundError(f"{path} is missing; run `{stage}` first")
        return path

    # ------------------------------------------------------------------ #
    # manifest
    # ------------------------------------------------------------------ #
    def manifest(self) -> dict[str, Any]:
        if not self.manifest_path.exists():
            return {"tool_version": tool_version(), "stages": {}}
        return json.loads(self.manifest_path.read_text(encoding="utf-8"))

    def stage_record(self, stage: str) -> str | None:
        return self.manifest().get("stages", {}).get(stage, {}).get("record")

    def parents(self, *stages: str) -> list[str]:
        return [rid for rid in (self.stage_record(s) for s in stages) if rid]

    def log_stage(
        self,
        stage: str,
        cfg: AppConfig,
        *,
        inputs: dict[str, str],
        outputs: dict[str, str],
        record_id: str | None,
    ) -> None:
        manifest = self.manifest()
        cfg_hash = cfg.hash
        if manifest.get("config_hash") not in (None, cfg_hash):
            _LOG.warning("config hash changed from %s to %s", manifest["config_hash"], cfg_hash)
        manifest.update(tool_version=tool_version(), config_hash=cfg_hash)
        manifest.setdefault("stages", {})[stage] = {
            "config_hash": cfg_hash,
            "inputs": inputs,
            "outputs": outputs,
            "record": record_id,
            "finished_at": utc_now_iso(),
        }
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")


def _record_id(handle: Any) -> str | None:
    return handle.record.id if handle.record is not None else None


# --------------------------------------------------------------------------- #
# offline stages
# --------------------------------------------------------------------------- #
def gen_data(
    cfg: AppConfig,
    ws: Workspace,
    tracker: RunTracker,
    *,
    seed: int | None = None,
    progress: bool = False,
) -> Path:
    data_cfg = cfg.data if seed is None else cfg.data.model_copy(update={"seed": seed})
    with tracker.phase("stage", "gen_data", seed=data_cfg.seed) as h:
        ds = generate_dataset(data_cfg, progress=progress)
        path = write_dataset(ds, ws.data_path)
    ws.log_stage(
        "gen-data",
        cfg,
        inputs={"data_config": hash_bytes(data_cfg.model_dump_json().encode())},
        outputs={"dataset": artifact_hash(path), "dataset_content": dataset_hash(ds)},
        record_id=_record_id(h),
    )
    _LOG.info("dataset %r -> %s", ds, path)
    return path


def _clean(ws: Workspace) -> LabeledDataset:
    return read_dataset(ws.require(ws.data_path, "gen-data"))


def train_zoo(cfg: AppConfig, ws: Workspace, tracker: RunTracker, *, progress: bool = False) -> SubstituteZoo:
    ds = _clean(ws)
    with tracker.phase("stage", "train_substitutes", parents=ws.parents("gen-data")) as h:
        zoo = train_substitutes(ds, cfg.zoo, out_dir=ws.zoo_dir, progress=progress)
    ws.log_stage(
        "train-substitutes",
        cfg,
        inputs={"dataset": artifact_hash(ws.data_path)},
        outputs={"zoo": artifact_hash(ws.zoo_dir)},
        record_id=_record_id(h),
    )
    return zoo


def gen_tasks(cfg: AppConfig, ws: Workspace, tracker: RunTracker, *, progress: bool = False) -> TaskLibrary:
    ds = _clean(ws)
    zoo = SubstituteZoo.load(ws.require(ws.zoo_dir, "train-substitutes"))
    cache = PerturbationCache(ws.cache_dir) if cfg.attacks.cache else None
    section = cfg.attacks
    with tracker.phase("stage", "gen_tasks", parents=ws.parents("gen-data", "train-substitutes")) as h:
        lib = build_task_library(
            section.specs,
            zoo,
            ds,
            section.split,
            section.holdout,
            cache=cache,
            workers=section.workers,
            progress=progress,
        )
        save_library(lib, ws.library_dir)
        h.params.update(tasks=len(lib), meta_test=list(lib.meta_test))
    if cache is not None:
        _LOG.info("perturbation cache: %d hits, %d misses", cache.hits, cache.misses)
    ws.log_stage(
        "gen-tasks",
        cfg,
        inputs={"dataset": artifact_hash(ws.data_path), "zoo": artifact_hash(ws.zoo_dir)},
        outputs={"library": artifact_hash(ws.library_dir)},
        record_id=_record_id(h),
    )
    return lib


def _library(ws: Workspace) -> TaskLibrary:
    return load_library(ws.require(ws.library_dir, "gen-tasks"))


def train_baselines(
    cfg: AppConfig,
    ws: Workspace,
    tracker: RunTracker,
    *,
    baselines: Iterable[str] | None = None,
    progress: bool = False,
) -> dict[str, Path]:
    """Offline phase of every baseline; Scratch only gets its initialisation."""
    labels = list(baselines) if baselines is not None else list(cfg.eval.baselines)
    lib = _library(ws)
    first = lib.tasks[0].support
    arch = preset(cfg.meta.arch, first.n_classes, input_length=first.length)
    parents = ws.parents("gen-tasks")
    written: dict[str, Path] = {}

    for label in labels:
        kind = baseline_kind(label)
        meta: dict[str, Any] = {"label": label, "config_hash": cfg.hash}
        if kind is Baseline.META:
            meta_cfg = cfg.meta.model_copy(update={"algorithm": MetaAlgorithm(label)})
            with tracker.phase("offline", "meta_train", baseline=label, parents=parents):
                result = meta_train(lib, meta_cfg, progress=progress)
            params = result.params
            meta.update(algorithm=label, final_meta_loss=result.trace[-1] if result.trace else None)
        elif kind is Baseline.TRANSFER_CLEAN:
            with tracker.phase("offline", "transfer_train", baseline=label, parents=ws.parents("gen-data")):
                params = transfer_train(_clean(ws), arch, cfg.zoo.train, progress=progress)
        elif kind is Baseline.TRANSFER_ADVERSARIAL:
            with tracker.phase("offline", "transfer_train", baseline=label, parents=parents):
                params = transfer_adversarial(lib, arch, cfg.zoo.train, cfg.meta, progress=progress)
        else:
            params = scratch_model(arch, seed=cfg.meta.seed)
        written[label] = Checkpoint(params, kind, meta).save(ws.checkpoint_path(label))
        _LOG.info("%s checkpoint -> %s", label, written[label])

    # checkpoints of baselines not retrained this run stay valid
    previous = ws.manifest().get("stages", {}).get("meta-train", {}).get("outputs", {})
    ws.log_stage(
        "meta-train",
        cfg,
        inputs={"library": artifact_hash(ws.library_dir)},
        outputs={**previous, **{label: artifact_hash(p) for label, p in written.items()}},
        record_id=None,
    )
    return written


def load_checkpoints(ws: Workspace, labels: Iterable[str]) -> dict[str, ModelParams]:
    return {
        label: Checkpoint.load(ws.require(ws.checkpoint_path(label), "meta-train")).params for label in labels
    }


# --------------------------------------------------------------------------- #
# online stages
# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class AdaptOutcome:
    path: Path
    ser_before: float
    ser_after: float
    seconds: float


def adapt(
    cfg: AppConfig,
    ws: Workspace,
    tracker: RunTracker,
    *,
    label: str,
    task_id: str | None = None,
    shots: int = 2,
    seed: int = 0,
) -> AdaptOutcome:
    """Adapt one checkpoint to one meta-test task and store the result."""
    lib = _library(ws)
    if not lib.meta_test:
        raise InsufficientTasksError("library has no meta-test tasks")
    tid = task_id or lib.meta_test[0]
    if tid not in {t.task_id for t in lib}:
        raise InsufficientTasksError(f"no task {tid!r} in the library")
    task = lib.get(tid)
    params = load_checkpoints(ws, [label])[label]
    support = take_shots(shot_source(task), shots, seed)
    rule = AdaptRule.from_config(cfg.meta, cfg.eval)
    before = evaluate_ser(params, task.query)
    result = rule.apply(label, params, support, seed)
    tracker.record(
        "online",
        "scratch_train" if baseline_kind(label) is Baseline.SCRATCH else "online_adapt",
        result.seconds,
        baseline=label,
        parents=ws.parents("gen-tasks"),
        task_id=task.task_id,
        shots=shots,
        seed=seed,
    )
    after = evaluate_ser(result.params, task.query)
    path = Checkpoint(
        result.params,
        baseline_kind(label),
        {"label": label, "task_id": task.task_id, "shots": shots, "seed": seed},
    ).save(ws.adapted_path(label, task.task_id, shots, seed))
    ws.log_stage(
        "adapt",
        cfg,
        inputs={"checkpoint": artifact_hash(ws.checkpoint_path(label)), "library": artifact_hash(ws.library_dir)},
        outputs={"adapted": artifact_hash(path)},
        record_id=None,
    )
    _LOG.info("%s on %s: %d-shot SER %.4f -> %.4f in %.4fs", label, task.task_id, shots, before, after, result.seconds)
    return AdaptOutcome(path, before, after, result.seconds)


def evaluate(
    cfg: AppConfig,
    ws: Workspace,
    tracker: RunTracker,
    *,
    shots: Iterable[int] | None = None,
    repeats: int | None = None,
    out: Path | None = None,
    parquet: bool = False,
) -> EvalReport:
    """Few-shot / 0-shot grid over every meta-test task, plus timings and sample efficiency."""
    lib = _library(ws)
    tasks = lib.test_tasks()
    checkpoints = load_checkpoints(ws, cfg.eval.baselines)
    rule = AdaptRule.from_config(cfg.meta, cfg.eval)
    shot_list = tuple(shots) if shots is not None else cfg.eval.shots
    n_repeats = repeats if repeats is not None else cfg.eval.repeats
    if any(k < 0 for k in shot_list):
        raise ConfigError(f"shot counts must be non-negative, got {list(shot_list)}")

    with tracker.phase("stage", "evaluate", parents=ws.parents("gen-tasks")) as h:
        report = few_shot_eval(
            checkpoints,
            tasks,
            shot_list,
            n_repeats,
            rule=rule,
            seed=cfg.eval.seed,
            tracker=tracker,
            workers=cfg.eval.workers,
            experiment_id=f"eval-{cfg.hash[:12]}",
            config_hash=cfg.hash,
        )
        efficiency: dict[str, int | None] = {}
        if cfg.eval.target_ser is not None:
            efficiency = sample_efficiency(
                checkpoints,
                tasks[0],
                cfg.eval.target_ser,
                cfg.eval.shot_grid,
                rule=rule,
                repeats=n_repeats,
                seed=cfg.eval.seed,
            )
        h.params.update(cells=len(report.cells), ser_hash=report.ser_hash())

    try:
        timings = timing_rows(timing_report([*tracker.records(), *_offline_from_log(ws)]))
    except TimingLogError as exc:
        _LOG.warning("no timing table: %s", exc)
        timings = ()

    inputs = {"library": artifact_hash(ws.library_dir)}
    inputs.update({label: artifact_hash(ws.checkpoint_path(label)) for label in checkpoints})
    report = report.model_copy(
        update={"timings": timings, "sample_efficiency": efficiency, "input_hashes": inputs}
    )
    paths = write_report(report, out or ws.report_path, parquet=parquet)
    ws.log_stage(
        "evaluate",
        cfg,
        inputs=inputs,
        outputs={
            "report": paths["json"].as_posix(),
            "report_hash": artifact_hash(paths["ser"]),
            "ser_hash": report.ser_hash(),
        },
        record_id=_record_id(h),
    )
    return report


def _offline_from_log(ws: Workspace) -> list[PhaseRecord]:
    """Offline records of earlier CLI runs; this run's records come from the tracker."""
    if not ws.run_log.exists():
        return []
    return [r for r in read_run_log(ws.run_log) if r.phase == "offline"]


def render_report(ws: Workspace, report_path: Path | None = None) -> str:
    """Human-readable summary of a stored report: SER table, timings, sample efficiency."""
    report = read_report(report_path or ws.require(ws.report_path, "evaluate"))
    summary = report.summary()
    mean = summary[summary.task_id == "mean"].pivot(index="baseline", columns="shots", values="ser_mean")
    lines = [
        f"experiment {report.experiment_id}  config {report.config_hash}  ser_hash {report.ser_hash()}",
        "",
        "mean SER over meta-test tasks (rows: baseline, columns: shots per class)",
        mean.to_string(float_format=lambda v: f"{v:.4f}"),
    ]
    if report.timings:
        table = _timing_frame(report)
        lines += ["", "offline / online time", format_timing_table(table)]
    if report.sample_efficiency:
        lines += ["", "shots per class to reach target SER"]
        lines += [f"  {b}: {'not reached' if k is None else k}" for b, k in sorted(report.sample_efficiency.items())]
    return "\n".join(lines) + "\n"


def _timing_frame(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame([t.model_dump() for t in report.timings], columns=["baseline", "offline_seconds", "online_seconds"])
