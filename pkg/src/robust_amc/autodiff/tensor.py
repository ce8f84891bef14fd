"""Dense float64 tensors and the node record every differentiable op emits."""

from __future__ import annotations

import contextvars

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, Sequence

import numpy as np

from robust_amc.errors import ShapeError

if TYPE_CHECKING:  # pragma: no cover
    from .tape import GradientTape

# Tapes currently recording, innermost last.  A context variable keeps graph
# construction on one thread independent from every other thread.
_ACTIVE_TAPES: contextvars.ContextVar[tuple["GradientTape", ...]] = (
    contextvars.ContextVar("_ACTIVE_TAPES", default=())
)

ArrayLike = Any
VJP = Callable[["Tensor"], Sequence["Tensor | None"]]


class Tensor:
    """Immutable row-major float64 array that ops can record on a tape.

    The wrapped ``data`` must not be mutated after construction; every op
    returns a fresh tensor.
    """

    __slots__ = ("data", "name")

    def __init__(self, data: ArrayLike, name: str | None = None) -> None:
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.name = name

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Same values, cut from every tape."""
        return Tensor(self.data.copy(), self.name)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"<Tensor shape={self.shape}{label}>"

    # ------------------------------------------------------------------
    # Operator sugar – every method routes through ``ops``
    # ------------------------------------------------------------------
    def __add__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from . import ops

        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from . import ops

        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.div(self, other)

    def __rtruediv__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.div(other, self)

    def __neg__(self) -> "Tensor":
        from . import ops

        return ops.neg(self)

    def __matmul__(self, other: Any) -> "Tensor":
        from . import ops

        return ops.matmul(self, other)

    def __getitem__(self, key: Any) -> "Tensor":
        from . import ops

        return ops.getitem(self, key)

    @property
    def T(self) -> "Tensor":
        from . import ops

        return ops.transpose(self)

    def reshape(self, *shape: int) -> "Tensor":
        from . import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> "Tensor":
        from . import ops

        return ops.reduce_sum(self, axis=axis, keepdims=keepdims)


@dataclass(eq=False, slots=True)
class Node:
    """One executed op: its inputs, output and adjoint rule.

    ``vjp`` maps the adjoint of ``output`` to one adjoint (or ``None``) per
    input and is written in terms of differentiable ops, so a higher-order
    tape records the reverse sweep as ordinary nodes.
    """

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    vjp: VJP
    differentiable: bool = True


def as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def apply_op(
    op: str,
    inputs: Sequence[Tensor],
    data: np.ndarray,
    vjp: VJP,
    *,
    differentiable: bool = True,
) -> Tensor:
    """Wrap *data* as a tensor and record the op on every tape tracking an input."""
    out = Tensor(data)
    tapes = _ACTIVE_TAPES.get()
    if tapes:
        ins = tuple(inputs)
        for tape in tapes:
            if tape.tracks_any(ins):
                tape._record(Node(op, ins, out, vjp, differentiable))
    return out
