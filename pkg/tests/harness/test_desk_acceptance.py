"""Ordinal claims of the desk experiment, end to end through the pipeline stages."""

from pathlib import Path

import pytest

from robust_amc.core import RunTracker
from robust_amc.harness import EvalReport, load_config, pipeline

pytestmark = pytest.mark.slow

DESK = Path(__file__).resolve().parents[2] / "configs" / "desk.json"
META = ("maml", "fomaml", "reptile")
MARGIN = 0.02


@pytest.fixture(scope="module")
def desk_report(tmp_path_factory) -> EvalReport:
    cfg = load_config(DESK)
    ws = pipeline.Workspace(tmp_path_factory.mktemp("desk") / "work")
    ws.root.mkdir(parents=True)
    tracker = RunTracker().start()
    try:
        pipeline.gen_data(cfg, ws, tracker)
        pipeline.train_zoo(cfg, ws, tracker)
        pipeline.gen_tasks(cfg, ws, tracker)
        pipeline.train_baselines(cfg, ws, tracker)
        return pipeline.evaluate(cfg, ws, tracker)
    finally:
        tracker.stop()


@pytest.mark.parametrize("shots", [2, 10])
@pytest.mark.parametrize("meta", META)
def test_few_shot_ordering(desk_report, meta, shots):
    ser = {b: desk_report.mean_ser(b, shots) for b in (meta, "transfer_adversarial", "transfer_clean", "scratch")}
    assert ser[meta] + MARGIN <= ser["transfer_adversarial"]
    assert ser["transfer_adversarial"] + MARGIN <= ser["transfer_clean"]
    assert ser["transfer_clean"] + MARGIN <= ser["scratch"]


@pytest.mark.parametrize("meta", META)
def test_zero_shot_generalisation(desk_report, meta):
    ser = desk_report.mean_ser(meta, 0)
    assert ser + MARGIN <= desk_report.mean_ser("transfer_adversarial", 0)
    assert ser + MARGIN <= desk_report.mean_ser("transfer_clean", 0)


@pytest.mark.parametrize("meta", META)
def test_meta_needs_a_fifth_of_the_transfer_shots(desk_report, meta):
    reached = desk_report.sample_efficiency
    assert reached[meta] is not None
    if reached["transfer_adversarial"] is not None:
        assert 5 * reached[meta] <= reached["transfer_adversarial"]


def test_timing_ordering(desk_report):
    rows = {row.baseline: row for row in desk_report.timings}
    assert rows["scratch"].offline_seconds == 0.0
    for meta in META:
        for transfer in ("transfer_adversarial", "transfer_clean"):
            assert rows[meta].offline_seconds > rows[transfer].offline_seconds
            # both run the same inner loop online
            assert rows[meta].online_seconds <= 1.25 * rows[transfer].online_seconds
            assert rows[transfer].online_seconds < rows["scratch"].online_seconds


@pytest.mark.parametrize("meta", META)
def test_meta_ser_does_not_grow_with_shots(desk_report, meta):
    curve = [desk_report.mean_ser(meta, k) for k in desk_report.shots]
    for fewer, more in zip(curve, curve[1:]):
        assert more <= fewer + MARGIN


def test_untrained_scratch_is_near_chance(desk_report):
    n_classes = len(load_config(DESK).data.schemes)
    assert desk_report.mean_ser("scratch", 0) == pytest.approx(1 - 1 / n_classes, abs=0.1)
