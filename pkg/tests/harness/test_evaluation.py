import numpy as np
import pytest

from robust_amc.core import PhaseRecord, RunTracker
from robust_amc.errors import ShapeError, ShotCountError, TimingLogError
from robust_amc.harness import (
    evaluate_ser,
    few_shot_eval,
    format_timing_table,
    sample_efficiency,
    shot_limit,
    shot_source,
    take_shots,
    timing_report,
)
from robust_amc.meta import scratch_model
from robust_amc.models import init_model, mlp_small, predict_batch
from robust_amc.signals import LabeledDataset
from robust_amc.writers import RunLogWriter
from tests._toys import blobs


# --------------------------------------------------------------------------- #
# evaluate_ser
# --------------------------------------------------------------------------- #
def test_ser_of_model_on_its_own_predictions_is_zero():
    ds = blobs(n_per_class=15, length=8)
    params = init_model(mlp_small(2, input_length=8), seed=3)
    own = LabeledDataset(ds.frames, predict_batch(params, ds.frames), ds.snr_db, ds.class_names)
    assert evaluate_ser(params, own) == 0.0


def test_constant_prediction_on_balanced_eight_classes():
    names = tuple(f"c{i}" for i in range(8))
    ds = LabeledDataset(np.zeros((16, 2, 8)), np.repeat(np.arange(8), 2), np.zeros(16, dtype=np.int64), names)
    params = init_model(mlp_small(8, input_length=8), seed=0)
    assert evaluate_ser(params, ds) == pytest.approx(7 / 8)


def test_ser_rejects_empty_or_mismatched_data():
    params = init_model(mlp_small(2, input_length=8), seed=0)
    with pytest.raises(ShapeError):
        evaluate_ser(params, blobs(n_per_class=1, length=8).subset([]))
    with pytest.raises(ShapeError):
        evaluate_ser(params, blobs(n_per_class=3, length=16))


# --------------------------------------------------------------------------- #
# take_shots
# --------------------------------------------------------------------------- #
def test_shots_are_class_balanced_and_seeded():
    ds = blobs(n_per_class=10, length=8)
    two = take_shots(ds, 2, seed=5)
    assert len(two) == 2 * ds.n_classes
    np.testing.assert_array_equal(two.class_counts(), [2, 2])
    assert take_shots(ds, 2, seed=5) == two
    assert len(take_shots(ds, 0, seed=5)) == 0


@pytest.mark.parametrize("shots", [-1, 11])
def test_invalid_shot_counts(shots):
    with pytest.raises(ShotCountError):
        take_shots(blobs(n_per_class=10, length=8), shots, seed=0)


# --------------------------------------------------------------------------- #
# few_shot_eval
# --------------------------------------------------------------------------- #
def test_zero_shot_cells_score_the_deployed_checkpoint(toy_library, checkpoints, rule):
    tasks = toy_library.test_tasks()
    report = few_shot_eval(checkpoints, tasks, [0], repeats=2, rule=rule)
    assert len(report.cells) == len(checkpoints) * len(tasks) * 2
    for cell in report.cells:
        task = toy_library.get(cell.task_id)
        assert cell.ser == evaluate_ser(checkpoints[cell.baseline], task.query)
        assert cell.attack == task.attack.name
        assert cell.substitute == task.substitute_id


def test_report_grid_is_sorted_and_complete(toy_library, checkpoints, rule):
    report = few_shot_eval(checkpoints, toy_library.test_tasks(), [2, 0, 5], repeats=2, rule=rule, seed=4)
    keys = [c.key for c in report.cells]
    assert keys == sorted(keys)
    assert report.shots == [0, 2, 5]
    assert report.seeds == (4, 5)
    assert report.baselines == sorted(checkpoints)
    assert all(0.0 <= c.ser <= 1.0 for c in report.cells)


def test_evaluation_is_reproducible_across_workers(toy_library, checkpoints, rule):
    tasks = toy_library.test_tasks()
    one = few_shot_eval(checkpoints, tasks, [0, 2], repeats=2, rule=rule)
    again = few_shot_eval(checkpoints, tasks, [0, 2], repeats=2, rule=rule)
    threaded = few_shot_eval(checkpoints, tasks, [0, 2], repeats=2, rule=rule, workers=3)
    assert one.ser_hash() == again.ser_hash() == threaded.ser_hash()


def test_only_nonzero_shots_spend_adaptation_time(toy_library, checkpoints, rule):
    task = toy_library.test_tasks()[0]
    report = few_shot_eval({"maml": checkpoints["maml"]}, [task], [0, 5], repeats=1, rule=rule)
    zero, five = sorted(report.cells, key=lambda c: c.shots)
    assert five.online_seconds > zero.online_seconds


def test_scratch_at_zero_shots_is_chance_level(rule):
    names = tuple(f"c{i}" for i in range(8))
    query = LabeledDataset(np.zeros((40, 2, 8)), np.repeat(np.arange(8), 5), np.zeros(40, dtype=np.int64), names)
    params = scratch_model(mlp_small(8, input_length=8), seed=3)
    result = rule.apply("scratch", params, query.subset([]), seed=0)
    assert result.params is params
    assert result.seconds == 0.0
    assert evaluate_ser(result.params, query) == pytest.approx(1 - 1 / 8)


def test_shots_beyond_support_and_pool_rejected(toy_library, checkpoints, rule):
    with pytest.raises(ShotCountError):
        few_shot_eval(checkpoints, toy_library.test_tasks(), [0, 11], rule=rule)


def test_large_shot_counts_draw_from_pool_and_never_from_query(toy_library, checkpoints, rule):
    task = toy_library.test_tasks()[0]
    assert shot_limit(task) == 10
    query_rows = {row.tobytes() for row in task.query.frames}
    allowed_rows = {row.tobytes() for row in task.support.frames} | {row.tobytes() for row in task.pool.frames}
    for seed in range(4):
        drawn = take_shots(shot_source(task), 8, seed)
        rows = {row.tobytes() for row in drawn.frames}
        assert list(drawn.class_counts()) == [8, 8]
        assert rows <= allowed_rows
        assert not rows & query_rows
        assert rows - {row.tobytes() for row in task.support.frames}
    report = few_shot_eval(checkpoints, [task], [0, 10], repeats=1, rule=rule)
    assert report.shots == [0, 10]


def test_empty_inputs_rejected(toy_library, checkpoints, rule):
    with pytest.raises(ShapeError):
        few_shot_eval(checkpoints, [], [0], rule=rule)
    with pytest.raises(ShapeError):
        few_shot_eval({}, toy_library.test_tasks(), [0], rule=rule)


def test_online_phases_are_tracked(toy_library, checkpoints, rule):
    tracker = RunTracker().start()
    report = few_shot_eval(checkpoints, toy_library.test_tasks(), [0, 2], repeats=1, rule=rule, tracker=tracker)
    records = tracker.records()
    assert len(records) == len(report.cells)
    assert {r.phase for r in records} == {"online"}
    scratch_ops = {r.operation for r in records if r.baseline == "scratch"}
    assert scratch_ops == {"scratch_train"}
    assert {r.operation for r in records if r.baseline == "maml"} == {"online_adapt"}


# --------------------------------------------------------------------------- #
# sample_efficiency
# --------------------------------------------------------------------------- #
def test_baseline_already_on_target_needs_no_shots(toy_library, checkpoints, rule):
    task = toy_library.test_tasks()[0]
    reached = sample_efficiency(checkpoints, task, 1.0, [5, 0, 2], rule=rule, repeats=1)
    assert reached == {label: 0 for label in checkpoints}


def test_unreachable_target_is_marked(toy_library, checkpoints, rule):
    task = toy_library.test_tasks()[0]
    reached = sample_efficiency(checkpoints, task, -1.0, [0, 2], rule=rule, repeats=1)
    assert reached == {label: None for label in checkpoints}


def test_empty_grid_rejected(toy_library, checkpoints, rule):
    with pytest.raises(ShotCountError):
        sample_efficiency(checkpoints, toy_library.test_tasks()[0], 0.5, [], rule=rule)


def test_grid_points_beyond_support_and_pool_are_rejected(toy_library, checkpoints, rule):
    task = toy_library.test_tasks()[0]
    reached = sample_efficiency({"maml": checkpoints["maml"]}, task, 1.0, [0, 10], rule=rule, repeats=1)
    assert reached == {"maml": 0}
    with pytest.raises(ShotCountError):
        sample_efficiency({"maml": checkpoints["maml"]}, task, 1.0, [0, 100], rule=rule, repeats=1)
    with pytest.raises(ShotCountError):
        sample_efficiency(checkpoints, task, 1.0, [100], rule=rule)


# --------------------------------------------------------------------------- #
# timing_report
# --------------------------------------------------------------------------- #
def _records() -> list[PhaseRecord]:
    return [
        PhaseRecord("offline", "meta_train", 12.0, baseline="maml"),
        PhaseRecord("offline", "transfer_train", 5.0, baseline="transfer_clean"),
        PhaseRecord("online", "online_adapt", 0.1, baseline="maml", params={"shots": 2}),
        PhaseRecord("online", "online_adapt", 0.3, baseline="maml", params={"shots": 10}),
        PhaseRecord("online", "online_adapt", 0.0, baseline="maml", params={"shots": 0}),
        PhaseRecord("online", "online_adapt", 0.5, baseline="transfer_clean", params={"shots": 2}),
        PhaseRecord("online", "scratch_train", 4.0, baseline="scratch", params={"shots": 2}),
        PhaseRecord("stage", "evaluate", 30.0),
    ]


def test_timing_table_from_records():
    table = timing_report(_records()).set_index("baseline")
    assert list(table.index) == ["maml", "scratch", "transfer_clean"]
    assert table.loc["maml", "offline_seconds"] == 12.0
    assert table.loc["maml", "online_seconds"] == pytest.approx(0.2)
    assert table.loc["scratch", "offline_seconds"] == 0.0
    assert table.loc["scratch", "online_seconds"] == 4.0


def test_latest_offline_record_wins():
    records = _records() + [PhaseRecord("offline", "meta_train", 20.0, baseline="maml")]
    table = timing_report(records).set_index("baseline")
    assert table.loc["maml", "offline_seconds"] == 20.0


def test_scratch_offline_shows_dash():
    text = format_timing_table(timing_report(_records()))
    scratch_line = next(line for line in text.splitlines() if line.strip().startswith("scratch"))
    assert scratch_line.split()[1] == "-"


def test_timing_report_reads_run_logs(tmp_path):
    path = tmp_path / "runlog.jsonl"
    tracker = RunTracker().start()
    with RunLogWriter(path):
        tracker.record("offline", "meta_train", 3.0, baseline="maml")
        tracker.record("online", "online_adapt", 0.25, baseline="maml", shots=2)
    table = timing_report(path)
    assert table.to_dict("records") == [{"baseline": "maml", "offline_seconds": 3.0, "online_seconds": 0.25}]
    assert timing_report([path]).equals(table)


@pytest.mark.parametrize("phase", ["offline", "online"])
def test_missing_phase_markers(phase):
    records = [r for r in _records() if r.phase != phase]
    with pytest.raises(TimingLogError):
        timing_report(records)
