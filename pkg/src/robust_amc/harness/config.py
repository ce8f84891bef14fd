"""Root configuration document read by every CLI subcommand."""

from __future__ import annotations

import json

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from robust_amc.attacks import AttackSpec
from robust_amc.errors import ConfigError
from robust_amc.meta import Baseline, MetaAlgorithm, MetaConfig, config_hash
from robust_amc.models import TrainConfig
from robust_amc.signals import GeneratorConfig
from robust_amc.tasks import HoldoutConfig, SplitConfig, ZooSpec

_META_LABELS = frozenset(a.value for a in MetaAlgorithm)
_OTHER_LABELS = frozenset(b.value for b in Baseline if b is not Baseline.META)

DESK_SHOT_GRID: tuple[int, ...] = (0, 2, 5, 10, 20, 40, 80, 160, 320)


def baseline_kind(label: str) -> Baseline:
    """Map a report label (``maml``, ``scratch`` ...) to its :class:`Baseline`."""
    if label in _META_LABELS:
        return Baseline.META
    if label in _OTHER_LABELS:
        return Baseline(label)
    raise ConfigError(f"unknown baseline {label!r}")


class AttackSection(BaseModel):
    """Attacks crossed with the substitute zoo, and how the crosses are split."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    specs: tuple[AttackSpec, ...]
    split: SplitConfig = SplitConfig()
    holdout: HoldoutConfig = HoldoutConfig()
    cache: bool = True
    workers: int = Field(1, ge=1)

    @field_validator("specs")
    @classmethod
    def _names_unique(cls, v: tuple[AttackSpec, ...]) -> tuple[AttackSpec, ...]:
        names = [s.name for s in v]
        if len(set(names)) != len(names):
            raise ValueError(f"attack names must be unique, got {names}")
        return v


class EvalConfig(BaseModel):
    """Online-phase evaluation protocol.

    ``baselines`` lists report labels: meta algorithm names (``maml``,
    ``fomaml``, ``reptile``) and the comparison models (``scratch``,
    ``transfer_clean``, ``transfer_adversarial``).  Scratch is adapted by
    full training on the shots with ``scratch_train``; every other baseline
    runs the meta inner loop.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    baselines: tuple[str, ...] = ("maml", "transfer_adversarial", "transfer_clean", "scratch")
    shots: tuple[int, ...] = (0, 2, 5, 10)
    repeats: int = Field(5, ge=1)
    seed: int = 0
    scratch_train: TrainConfig = TrainConfig(lr=1e-2, batch_size=32, epochs=30)
    target_ser: float | None = Field(None, ge=0.0, le=1.0)
    shot_grid: tuple[int, ...] = DESK_SHOT_GRID
    workers: int = Field(1, ge=1)

    @field_validator("baselines")
    @classmethod
    def _known_baselines(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        unknown = [b for b in v if b not in _META_LABELS | _OTHER_LABELS]
        if unknown:
            raise ValueError(f"unknown baselines {unknown}; choose from {sorted(_META_LABELS | _OTHER_LABELS)}")
        if not v or len(set(v)) != len(v):
            raise ValueError("baselines must be a non-empty list without duplicates")
        return v

    @field_validator("shots", "shot_grid")
    @classmethod
    def _shots_valid(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v:
            raise ValueError("shot list is empty")
        if any(s < 0 for s in v):
            raise ValueError("shot counts must be non-negative")
        return tuple(sorted(set(v)))

    def meta_algorithms(self) -> list[MetaAlgorithm]:
        return [MetaAlgorithm(b) for b in self.baselines if b in _META_LABELS]


class AppConfig(BaseModel):
    """One JSON document with the sections ``data``, ``zoo``, ``attacks``, ``meta``, ``eval``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    data: GeneratorConfig = GeneratorConfig()
    zoo: ZooSpec
    attacks: AttackSection
    meta: MetaConfig = MetaConfig()
    eval: EvalConfig = EvalConfig()

    @model_validator(mode="after")
    def _transfer_attack_known(self) -> "AppConfig":
        name = self.meta.transfer_attack
        if name is not None and name not in {s.name for s in self.attacks.specs}:
            raise ValueError(f"meta.transfer_attack {name!r} is not one of the configured attacks")
        return self

    @model_validator(mode="after")
    def _shots_fit_data(self) -> "AppConfig":
        # each task perturbs the whole clean set; shots come from everything outside the query
        per_class = self.data.frames_per_class_per_snr * len(self.data.snr_db)
        available = per_class - self.attacks.split.query_per_class
        wanted = self.eval.shots + (self.eval.shot_grid if self.eval.target_ser is not None else ())
        if max(wanted) > available:
            raise ValueError(
                f"{max(wanted)}-shot evaluation needs more than the {available} non-query frames per class "
                f"({per_class} per class minus {self.attacks.split.query_per_class} query)"
            )
        return self

    @property
    def hash(self) -> str:
        return config_hash(self)


def load_config(path: str | Path) -> AppConfig:
    """Parse and validate *path*.

    Unreadable or malformed JSON raises :class:`ConfigError`; schema
    violations surface as pydantic's ``ValidationError``.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return AppConfig.model_validate(raw)
