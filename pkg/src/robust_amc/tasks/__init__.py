"""Meta-learning tasks minted from attack × substitute crosses."""

from .library import (
    HoldoutConfig,
    TaskLibrary,
    build_task_library,
    load_library,
    meta_split,
    save_library,
)
from .task import SplitConfig, Task, generate_task, split_indices, task_id
from .zoo import (
    SubstituteEntry,
    SubstituteSpec,
    SubstituteZoo,
    ZooSpec,
    train_substitutes,
)

__all__ = [
    "HoldoutConfig",
    "SplitConfig",
    "SubstituteEntry",
    "SubstituteSpec",
    "SubstituteZoo",
    "Task",
    "TaskLibrary",
    "ZooSpec",
    "build_task_library",
    "generate_task",
    "load_library",
    "meta_split",
    "save_library",
    "split_indices",
    "task_id",
    "train_substitutes",
]
