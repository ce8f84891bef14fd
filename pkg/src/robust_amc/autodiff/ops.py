"""Differentiable primitives.

Every op computes its forward value with numpy and registers an adjoint rule
(vector-Jacobian product) expressed with the ops of this module, so that the
adjoint itself can be recorded and differentiated again.
"""

from __future__ import annotations

from typing import Any, Literal

import numpy as np

from robust_amc.errors import ShapeError

from .tensor import Tensor, apply_op, as_tensor

Axis = int | tuple[int, ...] | None


# --------------------------------------------------------------------------- #
# Broadcasting helpers
# --------------------------------------------------------------------------- #
def _reduce_to(arr: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    extra = arr.ndim - len(shape)
    if extra < 0:
        raise ShapeError(f"cannot reduce shape {arr.shape} to {shape}")
    if extra:
        arr = arr.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and arr.shape[i] != 1)
    if axes:
        arr = arr.sum(axis=axes, keepdims=True)
    if arr.shape != shape:
        raise ShapeError(f"cannot reduce shape {arr.shape} to {shape}")
    return arr


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from exc


def _normalize_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(sorted(a % ndim for a in axes))


def _keepdims_shape(shape: tuple[int, ...], axes: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(1 if i in axes else n for i, n in enumerate(shape))


def sum_to(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Sum *a* down to *shape* (adjoint of broadcasting)."""
    shape = tuple(shape)
    if a.shape == shape:
        return a

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (broadcast_to(g, a.shape),)

    return apply_op("sum_to", (a,), _reduce_to(a.data, shape), vjp)


def broadcast_to(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    shape = tuple(shape)
    if a.shape == shape:
        return a
    try:
        data = np.array(np.broadcast_to(a.data, shape))
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast {a.shape} to {shape}") from exc

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (sum_to(g, a.shape),)

    return apply_op("broadcast_to", (a,), data, vjp)


# --------------------------------------------------------------------------- #
# Elementwise arithmetic
# --------------------------------------------------------------------------- #
def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        return sum_to(g, a.shape), sum_to(g, b.shape)

    return apply_op("add", (a, b), a.data + b.data, vjp)


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        return sum_to(g, a.shape), sum_to(neg(g), b.shape)

    return apply_op("sub", (a, b), a.data - b.data, vjp)


def neg(a: Tensor) -> Tensor:
    def vjp(g: Tensor) -> tuple[Tensor]:
        return (neg(g),)

    return apply_op("neg", (a,), -a.data, vjp)


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        return sum_to(mul(g, b), a.shape), sum_to(mul(g, a), b.shape)

    return apply_op("mul", (a, b), a.data * b.data, vjp)


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        ga = div(g, b)
        gb = neg(mul(ga, out))
        return sum_to(ga, a.shape), sum_to(gb, b.shape)

    with np.errstate(divide="ignore", invalid="ignore"):
        out = apply_op("div", (a, b), a.data / b.data, vjp)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a Python constant."""

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (scale(g, c),)

    return apply_op("scale", (a,), a.data * c, vjp)


# --------------------------------------------------------------------------- #
# Linear algebra and shape manipulation
# --------------------------------------------------------------------------- #
def matmul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        return matmul(g, transpose(b)), matmul(transpose(a), g)

    return apply_op("matmul", (a, b), a.data @ b.data, vjp)


def transpose(a: Tensor, axes: tuple[int, ...] | None = None) -> Tensor:
    perm = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    if sorted(perm) != list(range(a.ndim)):
        raise ShapeError(f"transpose: {perm} is not a permutation of {a.ndim} axes")
    inverse = tuple(int(i) for i in np.argsort(perm))

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (transpose(g, inverse),)

    return apply_op("transpose", (a,), np.transpose(a.data, perm).copy(), vjp)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        data = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {a.shape} to {shape}") from exc

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (reshape(g, a.shape),)

    return apply_op("reshape", (a,), data.copy(), vjp)


def reduce_sum(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    kd_shape = _keepdims_shape(a.shape, axes)

    def vjp(g: Tensor) -> tuple[Tensor]:
        gk = g if keepdims else reshape(g, kd_shape)
        return (broadcast_to(gk, a.shape),)

    return apply_op("sum", (a,), np.sum(a.data, axis=axes, keepdims=keepdims), vjp)


def mean(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return scale(reduce_sum(a, axis=axis, keepdims=keepdims), 1.0 / max(count, 1))


def _has_advanced_index(key: Any) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return any(isinstance(k, (np.ndarray, list)) for k in parts)


def getitem(a: Tensor, key: Any) -> Tensor:
    """Basic or advanced indexing; the adjoint scatters back into zeros."""
    try:
        data = np.array(a.data[key])
    except IndexError as exc:
        raise ShapeError(f"index {key!r} out of range for shape {a.shape}") from exc

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (scatter(g, key, a.shape),)

    return apply_op("getitem", (a,), data, vjp)


def scatter(a: Tensor, key: Any, shape: tuple[int, ...]) -> Tensor:
    """Place *a* at ``zeros(shape)[key]``, summing duplicate positions."""
    out = np.zeros(shape, dtype=np.float64)
    if _has_advanced_index(key):
        np.add.at(out, key, a.data)
    else:
        out[key] = a.data

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (getitem(g, key),)

    return apply_op("scatter", (a,), out, vjp)


def pad(a: Tensor, left: int, right: int) -> Tensor:
    """Zero-pad the last axis."""
    if left == 0 and right == 0:
        return a
    length = a.shape[-1]
    shape = a.shape[:-1] + (length + left + right,)
    return scatter(a, (Ellipsis, slice(left, left + length)), shape)


# --------------------------------------------------------------------------- #
# Nonlinearities
# --------------------------------------------------------------------------- #
def relu(a: Tensor) -> Tensor:
    mask = Tensor((a.data > 0).astype(np.float64))

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (mul(g, mask),)

    return apply_op("relu", (a,), a.data * mask.data, vjp)


def tanh(a: Tensor) -> Tensor:
    def vjp(g: Tensor) -> tuple[Tensor]:
        return (mul(g, sub(1.0, mul(out, out))),)

    out = apply_op("tanh", (a,), np.tanh(a.data), vjp)
    return out


def sigmoid(a: Tensor) -> Tensor:
    def vjp(g: Tensor) -> tuple[Tensor]:
        return (mul(g, mul(out, sub(1.0, out))),)

    out = apply_op("sigmoid", (a,), 0.5 * (1.0 + np.tanh(0.5 * a.data)), vjp)
    return out


def softplus(a: Tensor) -> Tensor:
    def vjp(g: Tensor) -> tuple[Tensor]:
        return (mul(g, sigmoid(a)),)

    return apply_op("softplus", (a,), np.logaddexp(0.0, a.data), vjp)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)

    def vjp(g: Tensor) -> tuple[Tensor]:
        inner = reduce_sum(mul(g, out), axis=axis, keepdims=True)
        return (mul(out, sub(g, inner)),)

    out = apply_op("softmax", (a,), e / e.sum(axis=axis, keepdims=True), vjp)
    return out


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    eye = np.zeros((labels.shape[0], n_classes), dtype=np.float64)
    eye[np.arange(labels.shape[0]), labels] = 1.0
    return eye


def softmax_cross_entropy(
    logits: Tensor,
    labels: np.ndarray,
    reduction: Literal["mean", "sum"] = "mean",
) -> Tensor:
    """Fused, log-sum-exp stabilised cross-entropy over rows of ``(N, C)`` logits."""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2:
        raise ShapeError(f"logits must be (N, C), got {logits.shape}")
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels must have shape ({n},), got {labels.shape}")
    if n == 0:
        raise ShapeError("cross-entropy over an empty batch")
    if labels.min() < 0 or labels.max() >= c:
        raise ShapeError(f"labels must lie in [0, {c})")

    z = logits.data
    m = z.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
    per_row = lse - z[np.arange(n), labels]
    factor = 1.0 / n if reduction == "mean" else 1.0
    target = Tensor(one_hot(labels, c))

    def vjp(g: Tensor) -> tuple[Tensor]:
        delta = scale(sub(softmax(logits, axis=1), target), factor)
        return (mul(delta, g),)

    return apply_op("softmax_cross_entropy", (logits,), np.asarray(per_row.sum() * factor), vjp)


def sign(a: Tensor) -> Tensor:
    """Elementwise sign with ``sign(0) = 0``; declares a zero adjoint."""

    def vjp(g: Tensor) -> tuple[None]:
        return (None,)

    return apply_op("sign", (a,), np.sign(a.data), vjp, differentiable=False)


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    if lo > hi:
        raise ValueError(f"clamp bounds reversed: {lo} > {hi}")
    mask = Tensor(((a.data >= lo) & (a.data <= hi)).astype(np.float64))

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (mul(g, mask),)

    return apply_op("clamp", (a,), np.clip(a.data, lo, hi), vjp)


def _first_argmax_mask(values: np.ndarray, axis: int | None) -> np.ndarray:
    if axis is None:
        mask = np.zeros(values.size, dtype=np.float64)
        if values.size:
            mask[int(np.argmax(values.reshape(-1)))] = 1.0
        return mask.reshape(values.shape)
    idx = np.expand_dims(np.argmax(values, axis=axis), axis)
    mask = np.zeros_like(values, dtype=np.float64)
    np.put_along_axis(mask, idx, 1.0, axis=axis)
    return mask


def reduce_max(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    """Maximum along *axis*; the adjoint flows to the first maximal entry."""
    axes = _normalize_axes(axis, a.ndim)
    kd_shape = _keepdims_shape(a.shape, axes)
    mask = Tensor(_first_argmax_mask(a.data, axis))

    def vjp(g: Tensor) -> tuple[Tensor]:
        gk = g if keepdims else reshape(g, kd_shape)
        return (mul(broadcast_to(gk, a.shape), mask),)

    return apply_op("max", (a,), np.max(a.data, axis=axis, keepdims=keepdims), vjp)


def norm_p(
    a: Tensor,
    p: float,
    axis: int | None = None,
    keepdims: bool = False,
) -> Tensor:
    """L1, L2 or L-infinity norm over *axis* (all axes when ``None``)."""
    axes = _normalize_axes(axis, a.ndim)
    kd_shape = _keepdims_shape(a.shape, axes)

    if p == 2:
        data = np.sqrt(np.sum(a.data * a.data, axis=axes, keepdims=keepdims))
    elif p == 1:
        data = np.sum(np.abs(a.data), axis=axes, keepdims=keepdims)
    elif p == np.inf:
        data = np.max(np.abs(a.data), axis=axis, keepdims=keepdims)
    else:
        raise ValueError(f"unsupported norm order {p!r}; use 1, 2 or inf")

    def vjp(g: Tensor) -> tuple[Tensor]:
        gk = g if keepdims else reshape(g, kd_shape)
        if p == 2:
            nk = out if keepdims else reshape(out, kd_shape)
            safe = add(nk, Tensor((nk.data == 0).astype(np.float64)))
            return (mul(broadcast_to(div(gk, safe), a.shape), a),)
        if p == 1:
            return (mul(broadcast_to(gk, a.shape), Tensor(np.sign(a.data))),)
        mask = _first_argmax_mask(np.abs(a.data), axis) * np.sign(a.data)
        return (mul(broadcast_to(gk, a.shape), Tensor(mask)),)

    out = apply_op(f"norm_{p}", (a,), data, vjp)
    return out


# --------------------------------------------------------------------------- #
# Convolution
# --------------------------------------------------------------------------- #
def conv1d(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Stride-1, "same"-padded 1-D cross-correlation.

    ``x`` is ``(N, C_in, L)``, ``w`` is ``(C_out, C_in, K)`` with odd ``K``.
    The op is the composition pad → window gather → matmul, so its adjoint is
    the matching composition: ``matmulᵀ`` gives the window adjoint and the
    weight gradient, the gather adjoint scatter-adds windows back onto the
    padded signal, and un-padding slices the interior.  Every step is itself
    differentiable.
    """
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv1d: incompatible shapes x={x.shape} w={w.shape}")
    n, c_in, length = x.shape
    c_out, _, k = w.shape
    if k % 2 == 0:
        raise ShapeError(f"conv1d kernel must be odd for 'same' padding, got {k}")
    half = (k - 1) // 2

    xp = pad(x, half, half)
    window = np.arange(length)[:, None] + np.arange(k)[None, :]
    cols = getitem(xp, (slice(None), slice(None), window))  # (N, C, L, K)
    cols = reshape(transpose(cols, (0, 2, 1, 3)), (n * length, c_in * k))
    wmat = reshape(w, (c_out, c_in * k))
    out = matmul(cols, transpose(wmat))  # (N*L, C_out)
    out = transpose(reshape(out, (n, length, c_out)), (0, 2, 1))
    if b is not None:
        if b.shape != (c_out,):
            raise ShapeError(f"conv1d bias must be ({c_out},), got {b.shape}")
        out = add(out, reshape(b, (c_out, 1)))
    return out
