import json

import pandas as pd
import pytest

from pydantic import ValidationError

from robust_amc.errors import ReportSchemaError
from robust_amc.harness import CSV_COLUMNS, EvalReport, SERCell, TimingRow, read_report, write_report


def _cell(baseline: str, task: str, shots: int, seed: int, ser: float) -> SERCell:
    return SERCell(
        baseline=baseline,
        task_id=task,
        attack=task.split("@")[0],
        substitute=task.split("@")[1],
        shots=shots,
        seed=seed,
        ser=ser,
        online_seconds=0.01 * shots,
    )


@pytest.fixture
def report() -> EvalReport:
    cells = [
        _cell("maml", "pgd@s0", 2, 0, 0.2),
        _cell("maml", "pgd@s0", 2, 1, 0.4),
        _cell("maml", "pgd@s1", 2, 0, 0.6),
        _cell("maml", "pgd@s1", 2, 1, 0.2),
        _cell("scratch", "pgd@s0", 2, 0, 0.9),
        _cell("scratch", "pgd@s0", 0, 0, 0.875),
    ]
    return EvalReport(
        experiment_id="exp",
        config_hash="abc",
        cells=tuple(reversed(cells)),
        timings=(TimingRow(baseline="maml", offline_seconds=3.0, online_seconds=0.1),),
        seeds=(0, 1),
    )


def test_frame_rows_follow_cell_keys(report):
    df = report.frame()
    assert list(df.columns) == CSV_COLUMNS
    assert list(zip(df.baseline, df.task_id, df.shots, df.seed)) == sorted(c.key for c in report.cells)


def test_summary_has_per_task_and_mean_rows(report):
    s = report.summary()
    per_task = s[(s.baseline == "maml") & (s.task_id == "pgd@s0")].iloc[0]
    assert per_task.ser_mean == pytest.approx(0.3)
    assert per_task.ser_std == pytest.approx(0.1)
    assert per_task.n == 2
    # per-seed task means are 0.4 and 0.3
    assert report.mean_ser("maml", 2) == pytest.approx(0.35)
    assert report.mean_ser("scratch", 0) == pytest.approx(0.875)
    with pytest.raises(KeyError):
        report.mean_ser("scratch", 10)


def test_json_round_trip(report, tmp_path):
    paths = write_report(report, tmp_path / "out" / "report.json")
    back = read_report(paths["json"])
    assert back == report
    assert back.ser_hash() == report.ser_hash()


def test_csv_header_and_rows(report, tmp_path):
    paths = write_report(report, tmp_path)
    assert paths["json"] == tmp_path / "report.json"
    header = paths["csv"].read_text().splitlines()[0]
    assert header == "baseline,task_id,attack,substitute,shots,seed,ser,online_seconds"
    df = pd.read_csv(paths["csv"])
    assert len(df) == len(report.cells)
    summary = pd.read_csv(paths["summary"])
    assert set(summary.task_id) == {"pgd@s0", "pgd@s1", "mean"}


def test_parquet_matches_frame(report, tmp_path):
    paths = write_report(report, tmp_path, parquet=True)
    df = pd.read_parquet(paths["parquet"], engine="pyarrow")
    pd.testing.assert_frame_equal(df, report.frame())


def test_ser_hash_ignores_timings_and_timestamps(report):
    other = report.model_copy(update={"timings": (), "created_at": "1970-01-01T00:00:00Z"})
    assert other.ser_hash() == report.ser_hash()
    cells = list(report.cells)
    cells[0] = cells[0].model_copy(update={"ser": cells[0].ser + 1e-12})
    assert report.model_copy(update={"cells": tuple(cells)}).ser_hash() != report.ser_hash()


def test_ser_document_is_byte_stable_across_wall_times(report, tmp_path):
    slower = tuple(c.model_copy(update={"online_seconds": c.online_seconds + 5.0}) for c in report.cells)
    rerun = report.model_copy(
        update={"cells": tuple(reversed(slower)), "timings": (), "created_at": "1970-01-01T00:00:00Z"}
    )
    first = write_report(report, tmp_path / "a" / "report.json")["ser"].read_bytes()
    second = write_report(rerun, tmp_path / "b" / "report.json")["ser"].read_bytes()
    assert first == second
    doc = json.loads(first)
    assert "created_at" not in doc and "timings" not in doc
    assert all("online_seconds" not in c for c in doc["cells"])
    assert [(c["baseline"], c["task_id"], c["shots"], c["seed"]) for c in doc["cells"]] == sorted(
        c.key for c in report.cells
    )


def test_unknown_schema_version_rejected(report):
    raw = json.loads(report.to_json())
    raw["schema_version"] = 2
    with pytest.raises(ReportSchemaError):
        EvalReport.from_json(json.dumps(raw))
    del raw["schema_version"]
    with pytest.raises(ReportSchemaError):
        EvalReport.from_json(json.dumps(raw))


def test_malformed_report_rejected(report):
    raw = json.loads(report.to_json())
    raw["cells"][0]["ser"] = 1.5
    with pytest.raises(ReportSchemaError):
        EvalReport.from_json(json.dumps(raw))
    with pytest.raises(ReportSchemaError):
        EvalReport.from_json("[1, 2]")
    with pytest.raises(ReportSchemaError):
        EvalReport.from_json("{not json")


def test_cells_carry_valid_provenance():
    with pytest.raises(ValidationError):
        _cell("maml", "pgd@s0", 2, 0, -0.1)
    with pytest.raises(ValidationError):
        _cell("maml", "pgd@s0", -1, 0, 0.1)
    dup = _cell("maml", "pgd@s0", 2, 0, 0.1)
    with pytest.raises(ValidationError):
        EvalReport(experiment_id="x", config_hash="y", cells=(dup, dup))
