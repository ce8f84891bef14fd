"""Small synthetic datasets and task libraries shared across test packages."""

import numpy as np

from robust_amc.attacks import AttackSpec
from robust_amc.signals import LabeledDataset
from robust_amc.tasks import HoldoutConfig, SplitConfig, Task, TaskLibrary, meta_split, split_indices

TOY_SPLIT = SplitConfig(support_per_class=5, query_per_class=10)


def blobs(n_per_class: int = 60, length: int = 8, spread: float = 0.2, seed: int = 0) -> LabeledDataset:
    """Two Gaussian blobs at ±0.5 embedded as (2, length) frames."""
    rng = np.random.default_rng(seed)
    centre = np.full((2, length), 0.5)
    frames = np.concatenate(
        [
            centre + spread * rng.standard_normal((n_per_class, 2, length)),
            -centre + spread * rng.standard_normal((n_per_class, 2, length)),
        ]
    )
    labels = np.repeat([0, 1], n_per_class)
    return LabeledDataset(frames, labels, np.zeros(2 * n_per_class, dtype=np.int64), ("A", "B"))


def shifted_task(ds: LabeledDataset, attack: str, sid: str, shift: float, seed: int, method: str = "fgsm") -> Task:
    """Blob frames under a constant offset standing in for a perturbation."""
    moved = ds.with_frames(ds.frames + shift)
    s_idx, q_idx, p_idx = split_indices(ds.labels, ds.n_classes, TOY_SPLIT, seed)
    spec = AttackSpec(method=method, label=attack)
    return Task(
        f"{attack}@{sid}", spec, sid, moved.subset(s_idx), moved.subset(q_idx), moved.subset(p_idx), seed, s_idx, q_idx
    )


def toy_library() -> TaskLibrary:
    """Six shifted-blob tasks over attacks a0..a2 and substitutes s0, s1; one attack method held out."""
    ds = blobs(n_per_class=20, length=8)
    methods = {"a0": "fgsm", "a1": "mim", "a2": "pgd"}
    tasks = [
        shifted_task(ds, attack, sid, shift, seed, methods[attack])
        for seed, (attack, sid, shift) in enumerate(
            [("a0", "s0", 0.1), ("a0", "s1", -0.1), ("a1", "s0", 0.2), ("a1", "s1", -0.2), ("a2", "s0", 0.3), ("a2", "s1", 0.0)]
        )
    ]
    tasks.sort(key=lambda t: t.task_id)
    holdout = HoldoutConfig(mode="attack", seed=0)
    train, test = meta_split(tasks, holdout)
    return TaskLibrary(tuple(tasks), train, test, holdout)
