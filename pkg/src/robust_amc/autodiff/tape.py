from __future__ import annotations

import logging

from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from robust_amc.errors import (
    NonDifferentiablePathError,
    ShapeError,
    TapeError,
    UnregisteredVariableError,
)

from . import ops
from .tensor import _ACTIVE_TAPES, Node, Tensor

_LOG = logging.getLogger(__name__)


class GradientTape:
    """Ordered record of executed ops, replayed backwards by :meth:`gradient`.

    Only ops that consume a tracked tensor are recorded.  A tensor is tracked
    once it is :meth:`watch`-ed or produced by a recorded op.

    With ``higher_order=True`` the reverse sweep runs while the tape is
    recording, so every adjoint is itself an ordinary node and the returned
    gradients can be differentiated again (tape-on-tape).
    """

    def __init__(self, higher_order: bool = False) -> None:
        self.higher_order = higher_order
        self._nodes: list[Node] = []
        self._tracked: dict[int, Tensor] = {}
        self._token = None

    # ------------------------------------------------------------------ #
    # Recording
    # ------------------------------------------------------------------ #
    def __enter__(self) -> "GradientTape":
        if self._token is not None:
            raise TapeError("tape is already recording")
        self._token = _ACTIVE_TAPES.set(_ACTIVE_TAPES.get() + (self,))
        return self

    def __exit__(self, *_exc: object) -> None:
        _ACTIVE_TAPES.reset(self._token)
        self._token = None

    def watch(self, *tensors: Tensor) -> None:
        for t in tensors:
            self._tracked[id(t)] = t

    def tracks(self, t: Tensor) -> bool:
        return id(t) in self._tracked

    def tracks_any(self, tensors: Iterable[Tensor]) -> bool:
        return any(id(t) in self._tracked for t in tensors)

    def _record(self, node: Node) -> None:
        self._nodes.append(node)
        self._tracked[id(node.output)] = node.output

    @contextmanager
    def recording(self) -> Iterator["GradientTape"]:
        """Make sure the tape records inside the block, even outside its `with`."""
        active = _ACTIVE_TAPES.get()
        if self in active:
            yield self
            return
        token = _ACTIVE_TAPES.set(active + (self,))
        try:
            yield self
        finally:
            _ACTIVE_TAPES.reset(token)

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def ops(self) -> list[str]:
        return [n.op for n in self._nodes]

    # ------------------------------------------------------------------ #
    # Reverse sweep
    # ------------------------------------------------------------------ #
    def gradient(
        self,
        target: Tensor,
        sources: Sequence[Tensor],
        *,
        strict: bool = False,
    ) -> list[Tensor]:
        """Adjoints of scalar *target* with respect to each of *sources*.

        Sources the target does not depend on get a zero tensor.  With
        ``strict`` a non-differentiable op on a live path raises instead of
        contributing nothing.
        """
        if target.size != 1:
            raise ShapeError(f"gradient root must be scalar, got shape {target.shape}")
        for s in sources:
            if not self.tracks(s):
                raise UnregisteredVariableError(
                    f"{s!r} was neither watched nor produced on this tape"
                )

        nodes = list(self._nodes)
        reach = {id(s) for s in sources}
        relevant: list[Node] = []
        for node in nodes:
            if any(id(i) in reach for i in node.inputs):
                reach.add(id(node.output))
                relevant.append(node)

        if id(target) not in reach:
            _LOG.debug("gradient root is independent of all %d sources", len(sources))
            return [Tensor(np.zeros(s.shape)) for s in sources]

        active = _ACTIVE_TAPES.get()
        if self.higher_order:
            sweep_tapes = active if self in active else active + (self,)
        else:
            sweep_tapes = ()
        token = _ACTIVE_TAPES.set(sweep_tapes)
        try:
            adjoint: dict[int, Tensor] = {id(target): Tensor(np.ones(target.shape))}
            for node in reversed(relevant):
                g = adjoint.get(id(node.output))
                if g is None:
                    continue
                if not node.differentiable:
                    if strict:
                        raise NonDifferentiablePathError(
                            f"op {node.op!r} lies on the path being differentiated"
                        )
                    continue
                for inp, gi in zip(node.inputs, node.vjp(g)):
                    if gi is None or id(inp) not in reach:
                        continue
                    prev = adjoint.get(id(inp))
                    adjoint[id(inp)] = gi if prev is None else ops.add(prev, gi)
        finally:
            _ACTIVE_TAPES.reset(token)

        out: list[Tensor] = []
        for s in sources:
            g = adjoint.get(id(s))
            out.append(g if g is not None else Tensor(np.zeros(s.shape)))
        return out


def grad(tape: GradientTape, root: Tensor, wrt: Sequence[Tensor]) -> list[Tensor]:
    """Reverse-mode gradients of scalar *root* with respect to *wrt*."""
    return tape.gradient(root, wrt)


def grad2(
    tape: GradientTape,
    loss: Tensor,
    inner_wrt: Sequence[Tensor],
    outer_wrt: Sequence[Tensor],
    fn: Callable[[list[Tensor]], Tensor] | None = None,
) -> list[Tensor]:
    """``∇_outer fn(∇_inner loss)``; *fn* defaults to the sum of all entries.

    Passing ``fn=lambda g: (g[0] * v).sum()`` gives a Hessian-vector product.
    """
    if not tape.higher_order:
        raise TapeError("grad2 needs a tape created with higher_order=True")
    inner = tape.gradient(loss, inner_wrt, strict=True)
    with tape.recording():
        if fn is None:
            scalar = ops.reduce_sum(inner[0])
            for g in inner[1:]:
                scalar = ops.add(scalar, ops.reduce_sum(g))
        else:
            scalar = fn(inner)
    if not tape.tracks(scalar):
        return [Tensor(np.zeros(s.shape)) for s in outer_wrt]
    return tape.gradient(scalar, outer_wrt, strict=True)
