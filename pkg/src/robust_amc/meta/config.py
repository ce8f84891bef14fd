from __future__ import annotations

from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from robust_amc.core.utils import hash_bytes
from robust_amc.models import PRESETS


class MetaAlgorithm(str, Enum):
    MAML = "maml"
    FOMAML = "fomaml"
    REPTILE = "reptile"


class MetaConfig(BaseModel):
    """Offline meta-training and online adaptation settings.

    ``online_lr`` / ``online_steps`` default to the offline inner loop.
    ``outer_iters=0`` returns the initialisation unchanged.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    algorithm: MetaAlgorithm = MetaAlgorithm.MAML
    arch: str = "mlp_small"
    inner_lr: float = Field(0.01, gt=0)
    outer_lr: float = Field(0.001, gt=0)
    inner_steps: int = Field(5, ge=0)
    outer_iters: int = Field(2000, ge=0)
    task_batch: int = Field(4, ge=1)
    seed: int = 0
    online_lr: float | None = Field(None, gt=0)
    online_steps: int | None = Field(None, ge=0)
    transfer_attack: str | None = Field(None, description="attack name Transfer-Adversarial trains on")
    transfer_mode: Literal["single", "mixture"] = "single"
    log_every: int = Field(50, ge=1)
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "MetaConfig":
        if self.arch not in PRESETS:
            raise ValueError(f"unknown architecture preset {self.arch!r}; choose from {sorted(PRESETS)}")
        if self.algorithm is MetaAlgorithm.REPTILE and self.inner_steps < 1:
            raise ValueError("Reptile needs at least one inner step")
        return self

    @property
    def adapt_lr(self) -> float:
        return self.online_lr if self.online_lr is not None else self.inner_lr

    @property
    def adapt_steps(self) -> int:
        return self.online_steps if self.online_steps is not None else self.inner_steps


def config_hash(cfg: BaseModel) -> str:
    return hash_bytes(cfg.model_dump_json().encode())
