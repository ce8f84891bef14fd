"""Meta-learned adversarial training for automatic modulation classification."""

import types as _types

from importlib import import_module
from typing import TYPE_CHECKING

from .core.events import global_bus, global_bus as event_bus
from .core.history import RunHistory
from .core.record import PhaseRecord
from .core.tracker import RunTracker
from .errors import RobustAMCError

__all__: list[str] = [
    "event_bus",
    "global_bus",
    "PhaseRecord",
    "RobustAMCError",
    "RunHistory",
    "RunTracker",
    "attacks",
    "autodiff",
    "harness",
    "meta",
    "models",
    "signals",
    "tasks",
    "writers",
]

_SUBPACKAGES = {"attacks", "autodiff", "harness", "meta", "models", "signals", "tasks", "writers"}


def __getattr__(name: str) -> _types.ModuleType:
    if name in _SUBPACKAGES:
        mod = import_module(f"{__name__}.{name}")
        globals()[name] = mod
        return mod
    raise AttributeError(name)


if TYPE_CHECKING:  # pragma: no cover
    from . import attacks, autodiff, harness, meta, models, signals, tasks, writers  # noqa: F401
