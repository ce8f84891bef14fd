"""Forward pass, initialisation and gradient access for the classifier family."""

from __future__ import annotations

import logging

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from robust_amc.autodiff import GradientTape, Tensor, ops
from robust_amc.core.utils import hash_bytes
from robust_amc.errors import NonFiniteError, ShapeError
from robust_amc.signals import IQFrame

from .architecture import Architecture, LayerSlot

_LOG = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Flat parameter vector θ bound to its architecture."""

    theta: np.ndarray
    arch: Architecture
    model_id: str | None = field(default=None)

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if theta.size != self.arch.param_count:
            raise ShapeError(
                f"θ has {theta.size} entries, {self.arch.name or self.arch.kind} needs {self.arch.param_count}"
            )
        if not np.all(np.isfinite(theta)):
            raise NonFiniteError("θ has non-finite entries")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def layout(self) -> tuple[LayerSlot, ...]:
        return self.arch.layout()

    def slot(self, name: str) -> np.ndarray:
        for s in self.layout:
            if s.name == name:
                return self.theta[s.offset : s.stop].reshape(s.shape)
        raise KeyError(name)

    def with_theta(self, theta: np.ndarray, model_id: str | None = None) -> "ModelParams":
        return ModelParams(theta, self.arch, model_id if model_id is not None else self.model_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return self.arch == other.arch and np.array_equal(self.theta, other.theta)

    def __repr__(self) -> str:
        label = self.model_id or self.arch.name or self.arch.kind
        return f"<ModelParams {label} |θ|={self.theta.size}>"


def model_hash(params: ModelParams) -> str:
    desc = repr(sorted(params.arch.to_dict().items())).encode()
    return hash_bytes(desc + params.theta.astype("<f8").tobytes())


def init_model(arch: Architecture, seed: int, model_id: str | None = None) -> ModelParams:
    """Fan-in scaled uniform weights ``U(±sqrt(6/fan_in))``, zero biases."""
    rng = np.random.default_rng(seed)
    theta = np.zeros(arch.param_count)
    for slot in arch.layout():
        if slot.name.endswith(".b"):
            continue
        fan_in = slot.shape[0] if len(slot.shape) == 2 else slot.shape[1] * slot.shape[2]
        bound = np.sqrt(6.0 / fan_in)
        theta[slot.offset : slot.stop] = rng.uniform(-bound, bound, size=slot.size)
    return ModelParams(theta, arch, model_id)


# --------------------------------------------------------------------------- #
# Forward
# --------------------------------------------------------------------------- #
def _activate(arch: Architecture, z: Tensor) -> Tensor:
    return ops.relu(z) if arch.activation == "relu" else ops.tanh(z)


def forward_logits(arch: Architecture, theta: Tensor, x: Tensor) -> Tensor:
    """Differentiable logits ``(N, C)`` of frames ``x`` of shape ``(N, 2, λ)``."""
    if x.ndim != 3 or x.shape[1] != 2 or x.shape[2] != arch.input_length:
        raise ShapeError(f"expected frames (N, 2, {arch.input_length}), got {x.shape}")
    n = x.shape[0]
    params = {
        s.name: ops.reshape(ops.getitem(theta, slice(s.offset, s.stop)), s.shape)
        for s in arch.layout()
    }

    h = x
    for k in range(len(arch.channels)):
        h = _activate(arch, ops.conv1d(h, params[f"conv{k}.w"], params[f"conv{k}.b"]))
    h = ops.reshape(h, (n, h.shape[1] * h.shape[2]))

    depth = len(arch.hidden) + 1
    for k in range(depth):
        h = ops.add(ops.matmul(h, params[f"dense{k}.w"]), params[f"dense{k}.b"])
        if k < depth - 1:
            h = _activate(arch, h)
    return h


def _as_batch(frames: np.ndarray | Sequence[IQFrame] | IQFrame) -> np.ndarray:
    if isinstance(frames, IQFrame):
        return frames.to_array()[None]
    if isinstance(frames, np.ndarray):
        return frames[None] if frames.ndim == 2 else frames
    return np.stack([f.to_array() for f in frames])


def logits(params: ModelParams, frames: np.ndarray) -> np.ndarray:
    x = Tensor(_as_batch(frames))
    return forward_logits(params.arch, Tensor(params.theta), x).numpy()


def argmax_class(z: np.ndarray) -> np.ndarray | int:
    """Index of the largest logit; ties go to the lowest index."""
    z = np.asarray(z)
    out = np.argmax(z, axis=-1)
    return int(out) if z.ndim == 1 else out


def predict(params: ModelParams, frame: IQFrame | np.ndarray) -> int:
    return int(argmax_class(logits(params, _as_batch(frame))[0]))


def predict_batch(params: ModelParams, frames: np.ndarray, batch_size: int = 512) -> np.ndarray:
    frames = _as_batch(frames)
    out = np.empty(frames.shape[0], dtype=np.int64)
    for start in range(0, frames.shape[0], batch_size):
        chunk = frames[start : start + batch_size]
        out[start : start + chunk.shape[0]] = argmax_class(logits(params, chunk))
    return out


def loss_and_grad(
    params: ModelParams, frames: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient with respect to θ."""
    theta = Tensor(params.theta)
    x = Tensor(_as_batch(frames))
    with GradientTape() as tape:
        tape.watch(theta)
        loss = ops.softmax_cross_entropy(forward_logits(params.arch, theta, x), labels)
    (g,) = tape.gradient(loss, [theta])
    return loss.item(), g.numpy()


def batch_loss(params: ModelParams, frames: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-frame cross-entropy values."""
    z = logits(params, frames)
    m = z.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
    return lse - z[np.arange(z.shape[0]), np.asarray(labels)]


def input_gradients(params: ModelParams, frames: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-frame ``∇_x L(f(x_k), y_k)`` for a batch ``(N, 2, λ)``.

    Frames do not interact in the forward pass, so the gradient of the summed
    loss splits exactly into per-frame gradients.
    """
    x = Tensor(_as_batch(frames))
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    with GradientTape() as tape:
        tape.watch(x)
        loss = ops.softmax_cross_entropy(
            forward_logits(params.arch, Tensor(params.theta), x), labels, reduction="sum"
        )
    (g,) = tape.gradient(loss, [x])
    return g.numpy()


def input_gradient(params: ModelParams, x: IQFrame | np.ndarray, y: int) -> np.ndarray:
    """``∇_x`` of the cross-entropy loss for one frame, shape ``(2, λ)``."""
    return input_gradients(params, _as_batch(x), np.array([y]))[0]
