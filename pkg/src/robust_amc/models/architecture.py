from __future__ import annotations

import math

from dataclasses import asdict, dataclass, field
from typing import Any, Literal

from robust_amc.errors import ShapeError

Kind = Literal["mlp", "cnn1d"]
Activation = Literal["relu", "tanh"]


@dataclass(frozen=True, slots=True)
class LayerSlot:
    """Where one weight or bias tensor lives inside the flat θ."""

    name: str
    shape: tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def stop(self) -> int:
        return self.offset + self.size


@dataclass(frozen=True, slots=True)
class Architecture:
    """Classifier ``ℝ^{2×λ} → ℝ^C``.

    ``mlp`` flattens the frame into dense layers of widths ``hidden``.
    ``cnn1d`` first runs "same"-padded conv layers (``channels``/``kernels``),
    then flattens into the dense stack.  Dense weights are stored ``(in, out)``
    and conv weights ``(out, in, K)``.
    """

    kind: Kind
    n_classes: int
    input_length: int = 128
    hidden: tuple[int, ...] = (64,)
    channels: tuple[int, ...] = ()
    kernels: tuple[int, ...] = ()
    activation: Activation = "relu"
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        object.__setattr__(self, "kernels", tuple(int(k) for k in self.kernels))
        if self.kind not in ("mlp", "cnn1d"):
            raise ValueError(f"unknown architecture kind {self.kind!r}")
        if self.activation not in ("relu", "tanh"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.n_classes < 1 or self.input_length < 1:
            raise ShapeError("zero-size layer: n_classes and input_length must be positive")
        if any(h < 1 for h in self.hidden) or any(c < 1 for c in self.channels):
            raise ShapeError("zero-size layer in hidden/channels")
        if self.kind == "mlp":
            if self.channels or self.kernels:
                raise ValueError("mlp takes no conv channels/kernels")
            if not self.hidden:
                raise ShapeError("an mlp needs at least one hidden layer")
        else:
            if not self.channels:
                raise ShapeError("a cnn1d needs at least one conv layer")
            if len(self.kernels) != len(self.channels):
                raise ValueError("cnn1d needs one kernel size per conv layer")
            if any(k < 1 or k % 2 == 0 for k in self.kernels):
                raise ShapeError(f"conv kernels must be odd and positive, got {self.kernels}")

    # ------------------------------------------------------------------ #
    # Layout
    # ------------------------------------------------------------------ #
    def layout(self) -> tuple[LayerSlot, ...]:
        slots: list[LayerSlot] = []
        offset = 0

        def add(name: str, shape: tuple[int, ...]) -> None:
            nonlocal offset
            slot = LayerSlot(name, shape, offset)
            slots.append(slot)
            offset = slot.stop

        c_in = 2
        for k, (c_out, width) in enumerate(zip(self.channels, self.kernels)):
            add(f"conv{k}.w", (c_out, c_in, width))
            add(f"conv{k}.b", (c_out,))
            c_in = c_out
        d_in = c_in * self.input_length
        for k, d_out in enumerate(self.hidden + (self.n_classes,)):
            add(f"dense{k}.w", (d_in, d_out))
            add(f"dense{k}.b", (d_out,))
            d_in = d_out
        return tuple(slots)

    @property
    def param_count(self) -> int:
        return self.layout()[-1].stop

    # ------------------------------------------------------------------ #
    # Descriptor
    # ------------------------------------------------------------------ #
    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["channels"] = list(self.channels)
        d["kernels"] = list(self.kernels)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Architecture":
        return cls(
            kind=d["kind"],
            n_classes=int(d["n_classes"]),
            input_length=int(d.get("input_length", 128)),
            hidden=tuple(d.get("hidden", ())),
            channels=tuple(d.get("channels", ())),
            kernels=tuple(d.get("kernels", ())),
            activation=d.get("activation", "relu"),
            name=d.get("name", ""),
        )


def mlp_small(n_classes: int, input_length: int = 128) -> Architecture:
    return Architecture("mlp", n_classes, input_length, hidden=(64,), name="mlp_small")


def mlp_wide(n_classes: int, input_length: int = 128) -> Architecture:
    return Architecture("mlp", n_classes, input_length, hidden=(256,), name="mlp_wide")


def cnn1d_lite(n_classes: int, input_length: int = 128) -> Architecture:
    """Two conv layers (16 channels, kernels 7 and 5) then a 64-unit dense layer."""
    return Architecture(
        "cnn1d",
        n_classes,
        input_length,
        hidden=(64,),
        channels=(16, 16),
        kernels=(7, 5),
        name="cnn1d_lite",
    )


PRESETS = {
    "mlp_small": mlp_small,
    "mlp_wide": mlp_wide,
    "cnn1d_lite": cnn1d_lite,
}


def preset(name: str, n_classes: int, input_length: int = 128) -> Architecture:
    try:
        return PRESETS[name](n_classes, input_length)
    except KeyError:
        raise ValueError(f"unknown architecture preset {name!r}; choose from {sorted(PRESETS)}") from None
