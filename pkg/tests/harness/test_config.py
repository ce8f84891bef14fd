import json

from pathlib import Path

import pytest

from pydantic import ValidationError

from robust_amc.errors import ConfigError
from robust_amc.harness import AppConfig, EvalConfig, baseline_kind, load_config
from robust_amc.meta import Baseline, MetaAlgorithm

DESK = Path(__file__).resolve().parents[2] / "configs" / "desk.json"


def test_desk_config_loads():
    cfg = load_config(DESK)
    assert cfg.data.frame_length == 64
    assert len(cfg.attacks.specs) * len(cfg.zoo.substitutes) == 25
    assert cfg.eval.meta_algorithms() == [MetaAlgorithm.MAML, MetaAlgorithm.FOMAML, MetaAlgorithm.REPTILE]
    assert cfg.hash == load_config(DESK).hash


def _raw() -> dict:
    return json.loads(DESK.read_text())


def _write(tmp_path, raw) -> Path:
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw) if not isinstance(raw, str) else raw)
    return path


def test_unknown_section_rejected(tmp_path):
    raw = _raw()
    raw["plots"] = {}
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, raw))


def test_unknown_transfer_attack_rejected(tmp_path):
    raw = _raw()
    raw["meta"]["transfer_attack"] = "nope"
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, raw))


def test_transfer_attack_names_a_configured_attack(tmp_path):
    raw = _raw()
    name = AppConfig.model_validate(raw).attacks.specs[1].name
    raw["meta"]["transfer_attack"] = name
    assert load_config(_write(tmp_path, raw)).meta.transfer_attack == name


def test_duplicate_attacks_rejected(tmp_path):
    raw = _raw()
    raw["attacks"]["specs"].append(raw["attacks"]["specs"][0])
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, raw))


@pytest.mark.parametrize("text", ["{broken", "[1, 2]"])
def test_unreadable_config(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_shot_lists_are_sorted_and_unique():
    cfg = EvalConfig(shots=(10, 0, 2, 2))
    assert cfg.shots == (0, 2, 10)
    with pytest.raises(ValidationError):
        EvalConfig(shots=(-1,))
    with pytest.raises(ValidationError):
        EvalConfig(shots=())


@pytest.mark.parametrize("baselines", [("maml", "maml"), ("vgg",), ()])
def test_bad_baseline_lists(baselines):
    with pytest.raises(ValidationError):
        EvalConfig(baselines=baselines)


def test_baseline_kind():
    assert baseline_kind("reptile") is Baseline.META
    assert baseline_kind("scratch") is Baseline.SCRATCH
    assert baseline_kind("transfer_adversarial") is Baseline.TRANSFER_ADVERSARIAL
    with pytest.raises(ConfigError):
        baseline_kind("meta-maml")


def test_desk_config_ships_the_full_shot_grid():
    cfg = load_config(DESK)
    assert cfg.eval.shot_grid == (0, 2, 5, 10, 20, 40, 80, 160, 320)
    per_class = cfg.data.frames_per_class_per_snr * len(cfg.data.snr_db)
    assert per_class - cfg.attacks.split.query_per_class >= cfg.eval.shot_grid[-1]


@pytest.mark.parametrize("section,key,value", [("eval", "shots", [0, 400]), ("data", "frames_per_class_per_snr", 50)])
def test_shots_must_fit_outside_the_query(tmp_path, section, key, value):
    raw = _raw()
    raw[section][key] = value
    with pytest.raises(ValidationError):
        load_config(_write(tmp_path, raw))


def test_shot_grid_only_checked_with_a_target(tmp_path):
    raw = _raw()
    raw["data"]["frames_per_class_per_snr"] = 50
    raw["eval"]["target_ser"] = None
    assert load_config(_write(tmp_path, raw)).eval.shot_grid[-1] == 320
