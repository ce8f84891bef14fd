"""Versioned evaluation report and its JSON / CSV / parquet renderings."""

from __future__ import annotations

import json
import logging

from pathlib import Path
from typing import Literal

import pandas as pd

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from robust_amc.core.utils import fingerprint, utc_now_iso
from robust_amc.errors import ReportSchemaError

_LOG = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = ["baseline", "task_id", "attack", "substitute", "shots", "seed", "ser", "online_seconds"]
MEAN_TASK = "mean"


class SERCell(BaseModel):
    """SER of one adapted model on one task's query set."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    baseline: str
    task_id: str
    attack: str
    substitute: str
    shots: int = Field(ge=0)
    seed: int
    ser: float = Field(ge=0.0, le=1.0)
    online_seconds: float = Field(0.0, ge=0.0)

    @property
    def key(self) -> tuple[str, str, int, int]:
        return (self.baseline, self.task_id, self.shots, self.seed)


class TimingRow(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    baseline: str
    offline_seconds: float = Field(ge=0.0)
    online_seconds: float = Field(ge=0.0)


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    experiment_id: str
    config_hash: str
    cells: tuple[SERCell, ...]
    timings: tuple[TimingRow, ...] = ()
    sample_efficiency: dict[str, int | None] = Field(default_factory=dict)
    seeds: tuple[int, ...] = ()
    input_hashes: dict[str, str] = Field(default_factory=dict)
    created_at: str = Field(default_factory=utc_now_iso)

    @model_validator(mode="after")
    def _cells_unique(self) -> "EvalReport":
        keys = [c.key for c in self.cells]
        if len(set(keys)) != len(keys):
            raise ValueError("report holds duplicate (baseline, task, shots, seed) cells")
        return self

    @property
    def shots(self) -> list[int]:
        return sorted({c.shots for c in self.cells})

    @property
    def baselines(self) -> list[str]:
        return sorted({c.baseline for c in self.cells})

    def frame(self) -> pd.DataFrame:
        """One row per cell, sorted by cell key."""
        rows = [c.model_dump() for c in sorted(self.cells, key=lambda c: c.key)]
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    def summary(self) -> pd.DataFrame:
        """Mean and std of SER per (baseline, task, shots), plus ``task_id == "mean"`` rows over all tasks."""
        df = self.frame()
        cols = ["baseline", "task_id", "shots", "ser_mean", "ser_std", "n"]
        if df.empty:
            return pd.DataFrame(columns=cols)
        per_task = (
            df.groupby(["baseline", "task_id", "shots"], sort=True)["ser"]
            .agg(ser_mean="mean", ser_std=lambda s: s.std(ddof=0), n="size")
            .reset_index()
        )
        # mean over tasks of the per-seed SER, then spread over seeds
        by_seed = df.groupby(["baseline", "shots", "seed"], sort=True)["ser"].mean().reset_index()
        overall = (
            by_seed.groupby(["baseline", "shots"], sort=True)["ser"]
            .agg(ser_mean="mean", ser_std=lambda s: s.std(ddof=0), n="size")
            .reset_index()
        )
        overall.insert(1, "task_id", MEAN_TASK)
        out = pd.concat([per_task, overall], ignore_index=True)
        return out[cols].sort_values(["baseline", "task_id", "shots"], kind="stable").reset_index(drop=True)

    def mean_ser(self, baseline: str, shots: int, task_id: str = MEAN_TASK) -> float:
        s = self.summary()
        row = s[(s.baseline == baseline) & (s.shots == shots) & (s.task_id == task_id)]
        if row.empty:
            raise KeyError((baseline, task_id, shots))
        return float(row.ser_mean.iloc[0])

    def ser_hash(self) -> str:
        """Digest over SER cells only; timings and timestamps do not enter it."""
        cells = sorted(self.cells, key=lambda c: c.key)
        return fingerprint(*((c.baseline, c.task_id, c.shots, c.seed, float(c.ser).hex()) for c in cells))

    def ser_document(self) -> str:
        """Canonical JSON of the report without timings, per-cell wall times or the timestamp.

        Reruns with the same config and seeds produce identical bytes.
        """
        payload = self.model_dump(
            mode="json",
            exclude={"timings": True, "created_at": True, "cells": {"__all__": {"online_seconds"}}},
        )
        payload["cells"] = sorted(payload["cells"], key=lambda c: (c["baseline"], c["task_id"], c["shots"], c["seed"]))
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ReportSchemaError(f"report is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ReportSchemaError("report must be a JSON object")
        version = raw.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ReportSchemaError(f"unsupported report schema version {version!r}; expected {SCHEMA_VERSION}")
        try:
            return cls.model_validate(raw)
        except ValidationError as exc:
            raise ReportSchemaError(f"malformed report: {exc.error_count()} validation error(s)\n{exc}") from exc


def write_report(report: EvalReport, out: str | Path, *, parquet: bool = False) -> dict[str, Path]:
    """Write ``<out>`` as JSON plus ``.csv`` / ``.summary.csv`` (and ``.parquet``) siblings.

    *out* may name the JSON file or a directory, which then receives
    ``report.json`` and friends.  ``.ser.json`` holds :meth:`EvalReport.ser_document`.
    """
    out = Path(out)
    json_path = out / "report.json" if out.suffix != ".json" else out
    json_path.parent.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": json_path,
        "csv": json_path.with_suffix(".csv"),
        "summary": json_path.with_name(f"{json_path.stem}.summary.csv"),
        "ser": json_path.with_name(f"{json_path.stem}.ser.json"),
    }
    json_path.write_text(report.to_json(), encoding="utf-8")
    paths["ser"].write_text(report.ser_document(), encoding="utf-8")
    report.frame().to_csv(paths["csv"], index=False, float_format="%.10g")
    report.summary().to_csv(paths["summary"], index=False, float_format="%.10g")
    if parquet:
        paths["parquet"] = json_path.with_suffix(".parquet")
        report.frame().to_parquet(paths["parquet"], engine="pyarrow", index=False)
    _LOG.info("wrote report %s (%d cells)", json_path, len(report.cells))
    return paths


def read_report(path: str | Path) -> EvalReport:
    return EvalReport.from_json(Path(path).read_text(encoding="utf-8"))
