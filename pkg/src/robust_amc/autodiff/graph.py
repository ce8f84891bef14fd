from __future__ import annotations

from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from robust_amc.errors import NonFiniteError, ShapeError, UnboundVariableError

from .tape import GradientTape
from .tensor import Tensor


@dataclass(frozen=True)
class Graph:
    """A named, define-by-run computation over free variables.

    ``fn`` is called with one keyword argument per name in ``inputs``.
    ``shapes`` optionally pins the expected shape of a variable; ``-1`` matches
    any extent on that axis.
    """

    fn: Callable[..., Tensor]
    inputs: tuple[str, ...]
    shapes: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    name: str = "graph"


def _check_shape(name: str, got: tuple[int, ...], want: tuple[int, ...]) -> None:
    if len(got) != len(want) or any(w not in (-1, g) for g, w in zip(got, want)):
        raise ShapeError(f"variable {name!r} has shape {got}, expected {want}")


def forward(
    graph: Graph,
    bindings: Mapping[str, Any],
    tape: GradientTape | None = None,
) -> Tensor:
    """Evaluate *graph* and return its root.

    Bound values that are not already tensors are wrapped; pass tensors to
    differentiate with respect to them afterwards.  When *tape* is given every
    bound variable is watched and the evaluation is recorded on it.
    """
    missing = [n for n in graph.inputs if n not in bindings]
    if missing:
        raise UnboundVariableError(f"{graph.name}: unbound variable(s) {missing}")

    values: dict[str, Tensor] = {}
    for name in graph.inputs:
        raw = bindings[name]
        t = raw if isinstance(raw, Tensor) else Tensor(np.asarray(raw), name=name)
        if not t.is_finite():
            raise NonFiniteError(f"{graph.name}: variable {name!r} has non-finite entries")
        if name in graph.shapes:
            _check_shape(name, t.shape, tuple(graph.shapes[name]))
        values[name] = t

    ctx = nullcontext() if tape is None else tape.recording()
    with ctx:
        if tape is not None:
            tape.watch(*values.values())
        root = graph.fn(**values)
    if not isinstance(root, Tensor):
        raise ShapeError(f"{graph.name}: graph function returned {type(root).__name__}")
    return root
