import numpy as np
import pytest

from robust_amc.attacks import AttackSpec, frame_norms
from robust_amc.errors import DatasetFormatError, InsufficientTasksError, ShapeError
from robust_amc.models import TrainConfig, accuracy, init_model, mlp_wide, train
from robust_amc.signals import LabeledDataset
from robust_amc.tasks import (
    HoldoutConfig,
    SplitConfig,
    SubstituteZoo,
    Task,
    build_task_library,
    generate_task,
    load_library,
    meta_split,
    save_library,
)

SPLIT = SplitConfig(support_per_class=5, query_per_class=15, seed=3)
ATTACKS = (
    AttackSpec(method="fgsm", eps=0.3),
    AttackSpec(method="pgd", eps=0.3, steps=3),
)


_METHODS = ("fgsm", "pgd", "mim", "cw_l2", "pca")


def _fake_task(attack: str, sid: str, spec: AttackSpec | None = None) -> Task:
    """Empty task; label ``a<i>`` maps onto the i-th attack method."""
    empty = LabeledDataset.empty(4, ("a",))
    spec = spec or AttackSpec(method=_METHODS[int(attack[1:])], label=attack)
    idx = np.zeros(0, dtype=np.int64)
    return Task(f"{attack}@{sid}", spec, sid, empty, empty, empty, 0, idx, idx)


def test_task_preserves_labels_and_budget(zoo, clean_ds):
    task = generate_task(ATTACKS[1], zoo.get("s0"), clean_ds, SPLIT)
    assert task.task_id == "pgd-linf-e0.3@s0"
    np.testing.assert_array_equal(task.support.labels, clean_ds.labels[task.support_index])
    np.testing.assert_array_equal(task.query.labels, clean_ds.labels[task.query_index])
    moved = task.support.frames - clean_ds.frames[task.support_index]
    assert np.all(frame_norms(moved, np.inf) <= 0.3 * (1 + 1e-9))


def test_task_split_is_balanced_and_disjoint(zoo, clean_ds):
    task = generate_task(ATTACKS[0], zoo.get("s1"), clean_ds, SPLIT)
    assert task.support.class_counts().tolist() == [5, 5]
    assert task.query.class_counts().tolist() == [15, 15]
    assert len(task.pool) == len(clean_ds) - 40
    assert not set(task.support_index) & set(task.query_index)


def test_task_minting_is_deterministic(zoo, clean_ds):
    a = generate_task(ATTACKS[0], zoo.get("s2"), clean_ds, SPLIT)
    b = generate_task(ATTACKS[0], zoo.get("s2"), clean_ds, SPLIT)
    assert a == b


def test_split_needs_enough_frames_per_class(zoo, clean_ds):
    with pytest.raises(ShapeError):
        generate_task(ATTACKS[0], zoo.get("s0"), clean_ds, SplitConfig(support_per_class=10, query_per_class=25))


def test_perturbations_transfer_to_unseen_victim(zoo, clean_ds):
    victim = init_model(mlp_wide(2, input_length=8), seed=123, model_id="victim")
    victim, _ = train(victim, clean_ds, TrainConfig(lr=1e-2, batch_size=16, epochs=8, seed=5))
    task = generate_task(AttackSpec(method="fgsm", eps=0.8), zoo.get("s0"), clean_ds, SPLIT)
    clean_query = clean_ds.subset(task.query_index)
    assert 1 - accuracy(victim, task.query) > 1 - accuracy(victim, clean_query)


def test_library_crosses_attacks_and_substitutes(zoo, clean_ds):
    lib = build_task_library(ATTACKS, zoo, clean_ds, SPLIT, HoldoutConfig(mode="attack", seed=1))
    assert len(lib) == 6
    assert [t.task_id for t in lib] == sorted(t.task_id for t in lib)
    held = {lib.get(t).attack.name for t in lib.meta_test}
    assert len(held) == 1
    assert not held & {lib.get(t).attack.name for t in lib.meta_train}
    assert len(lib.meta_train) == 3 and len(lib.meta_test) == 3


def test_library_rejects_single_substitute(zoo, clean_ds):
    lone = SubstituteZoo(zoo.entries[:1], zoo.models)
    with pytest.raises(InsufficientTasksError):
        build_task_library(ATTACKS, lone, clean_ds, SPLIT, HoldoutConfig())


def test_full_scale_task_counts():
    tasks = [_fake_task(f"a{i}", f"s{j}") for i in range(5) for j in range(11)]
    assert len(tasks) == 55
    train, test = meta_split(tasks, HoldoutConfig(mode="substitute"))
    assert (len(train), len(test)) == (50, 5)
    assert len({t.split("@")[1] for t in test}) == 1


def test_desk_scale_attack_holdout():
    tasks = [_fake_task(f"a{i}", f"s{j}") for i in range(5) for j in range(5)]
    train, test = meta_split(tasks, HoldoutConfig(mode="attack"))
    assert (len(train), len(test)) == (20, 5)
    held = {t.split("@")[0] for t in test}
    assert not held & {t.split("@")[0] for t in train}


def test_attack_holdout_keeps_every_variant_of_a_method_together():
    specs = [
        AttackSpec(method="fgsm", eps=0.1),
        AttackSpec(method="fgsm", eps=0.2),
        AttackSpec(method="pgd", eps=0.1),
        AttackSpec(method="fgsm", eps=0.1, psr_db=-10),
    ]
    tasks = [_fake_task(spec.name, sid, spec) for spec in specs for sid in ("s0", "s1")]
    by_id = {t.task_id: t for t in tasks}
    for seed in range(6):
        train, test = meta_split(tasks, HoldoutConfig(mode="attack", count=1, seed=seed))
        train_methods = {by_id[t].attack.method for t in train}
        test_methods = {by_id[t].attack.method for t in test}
        assert len(test_methods) == 1
        assert not train_methods & test_methods
        assert len(train) + len(test) == len(tasks)


def test_pair_holdout_picks_individual_tasks():
    tasks = [_fake_task(f"a{i}", f"s{j}") for i in range(3) for j in range(3)]
    train, test = meta_split(tasks, HoldoutConfig(mode="pair", count=2, seed=4))
    assert (len(train), len(test)) == (7, 2)
    assert set(train) | set(test) == {t.task_id for t in tasks}


@pytest.mark.parametrize("mode, count", [("attack", 2), ("substitute", 3), ("pair", 6)])
def test_holdout_larger_than_library_rejected(mode, count):
    tasks = [_fake_task(f"a{i}", f"s{j}") for i in range(2) for j in range(3)]
    with pytest.raises(InsufficientTasksError):
        meta_split(tasks, HoldoutConfig(mode=mode, count=count))


def test_library_save_and_load(zoo, clean_ds, tmp_path):
    lib = build_task_library(ATTACKS, zoo, clean_ds, SPLIT, HoldoutConfig(mode="substitute"))
    save_library(lib, tmp_path)
    loaded = load_library(tmp_path)
    assert loaded.meta_train == lib.meta_train
    assert loaded.meta_test == lib.meta_test
    assert loaded.holdout == lib.holdout
    for original, again in zip(lib, loaded):
        assert again.task_id == original.task_id
        assert again.attack == original.attack
        np.testing.assert_array_equal(again.query.labels, original.query.labels)
        np.testing.assert_allclose(again.query.frames, original.query.frames, atol=1e-6)

    support = next(tmp_path.glob("tasks/*/support.amcd"))
    support.write_bytes(support.read_bytes()[:-1])
    with pytest.raises(DatasetFormatError):
        load_library(tmp_path)
