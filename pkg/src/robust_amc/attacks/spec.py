"""Attack configuration and the perturbations attacks emit."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Literal

import numpy as np

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from robust_amc.core.utils import hash_bytes
from robust_amc.errors import NonFiniteError, ShapeError
from robust_amc.signals import LabeledDataset

from .projection import frame_norms


class AttackMethod(str, Enum):
    FGSM = "fgsm"
    PGD = "pgd"
    MIM = "mim"
    CW_L2 = "cw_l2"
    PCA = "pca"

    @property
    def default_norm(self) -> Literal["inf", "2"]:
        return "2" if self in (AttackMethod.CW_L2, AttackMethod.PCA) else "inf"


class AttackSpec(BaseModel):
    """One attack recipe.

    ``step_size`` defaults to ``eps / steps``.  ``psr_db``, when set, rescales
    the crafted perturbation to that perturbation-to-signal ratio and the
    budget follows the rescaling.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: AttackMethod
    eps: float = Field(0.1, gt=0)
    norm: Literal["inf", "2"] | None = Field(None, validate_default=True)
    step_size: float | None = Field(None, gt=0)
    steps: int = Field(10, ge=1)
    momentum: float = Field(1.0, ge=0)
    c: float = Field(1.0, ge=0)
    cw_lr: float = Field(0.01, gt=0)
    psr_db: float | None = None
    seed: int = 0
    label: str | None = None

    @field_validator("norm")
    @classmethod
    def _resolve_norm(cls, v: str | None, info: ValidationInfo) -> str:
        method = info.data.get("method")
        if method is None:
            return v or "inf"
        if v is None:
            return method.default_norm
        if method.default_norm == "2" and v != "2":
            raise ValueError(f"{method.value} is an L2 attack, got norm={v}")
        return v

    @property
    def p(self) -> float:
        return np.inf if self.norm == "inf" else 2.0

    @property
    def alpha(self) -> float:
        """Per-step size of the iterative sign attacks."""
        if self.method is AttackMethod.FGSM:
            return self.eps
        return self.step_size if self.step_size is not None else self.eps / self.steps

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        out = f"{self.method.value}-l{self.norm}-e{self.eps:g}"
        return out if self.psr_db is None else f"{out}-psr{self.psr_db:g}"


def spec_hash(spec: AttackSpec) -> str:
    return hash_bytes(spec.model_dump_json().encode())


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Additive δ, either per frame ``(N, 2, λ)`` or universal ``(2, λ)``.

    ``epsilon`` is the budget every frame of ``delta`` satisfies under
    ``spec.p``; it differs from ``spec.eps`` only after a PSR rescale.
    """

    delta: np.ndarray
    spec: AttackSpec
    epsilon: float
    substitute_id: str | None = field(default=None)

    def __post_init__(self) -> None:
        delta = np.array(self.delta, dtype=np.float64)
        if delta.ndim not in (2, 3) or delta.shape[-2] != 2:
            raise ShapeError(f"δ must be (2, L) or (N, 2, L), got {delta.shape}")
        if not np.all(np.isfinite(delta)):
            raise NonFiniteError("δ has non-finite entries")
        delta.flags.writeable = False
        object.__setattr__(self, "delta", delta)

    @property
    def universal(self) -> bool:
        return self.delta.ndim == 2

    @property
    def length(self) -> int:
        return int(self.delta.shape[-1])

    @property
    def norms(self) -> np.ndarray:
        return frame_norms(self.delta, self.spec.p)

    def apply(self, frames: np.ndarray) -> np.ndarray:
        frames = np.asarray(frames, dtype=np.float64)
        if frames.shape[-2:] != self.delta.shape[-2:]:
            raise ShapeError(f"δ {self.delta.shape} does not fit frames {frames.shape}")
        if not self.universal and frames.shape != self.delta.shape:
            raise ShapeError(f"{self.delta.shape[0]} per-frame perturbations for {frames.shape[0]} frames")
        return frames + self.delta

    def apply_to(self, ds: LabeledDataset) -> LabeledDataset:
        """Perturbed copy of *ds*; labels and SNRs are kept."""
        return ds.with_frames(self.apply(ds.frames))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Perturbation):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.epsilon == other.epsilon
            and self.delta.shape == other.delta.shape
            and np.array_equal(self.delta, other.delta)
        )

    def __repr__(self) -> str:
        kind = "universal" if self.universal else f"n={self.delta.shape[0]}"
        return f"<Perturbation {self.spec.name} {kind} ε={self.epsilon:.4g}>"
