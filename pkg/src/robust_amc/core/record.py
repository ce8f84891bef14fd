from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Literal, Tuple

from .utils import generate_uuid, utc_now_iso

PhaseKind = Literal["offline", "online", "stage"]


@dataclass(frozen=True, slots=True)
class PhaseRecord:
    """Immutable capture of one finished pipeline phase.

    Attributes
    ----------
    phase
        ``offline`` for pre-deployment training, ``online`` for adaptation of a
        deployed model, ``stage`` for plumbing steps (data generation, task
        minting, evaluation).
    operation
        Human-friendly label, e.g. ``meta_train`` or ``online_adapt``.
    baseline
        Baseline the phase belongs to (``maml``, ``transfer-clean`` ...) or
        ``None`` for stages shared by every baseline.
    seconds
        Wall time of the phase as measured by :func:`time.perf_counter`.
    parents
        Ids of the records this phase consumed the output of.  Empty for
        source stages such as data generation.
    params
        Small JSON-able provenance mapping (shots, task id, config hash ...).
    """

    phase: PhaseKind
    operation: str
    seconds: float
    baseline: str | None = None
    parents: Tuple[str, ...] = field(default_factory=tuple, repr=False)
    params: Dict[str, Any] = field(default_factory=dict, repr=False)

    id: str = field(default_factory=generate_uuid)
    timestamp: str = field(default_factory=utc_now_iso)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "timestamp": self.timestamp,
            "phase": self.phase,
            "operation": self.operation,
            "baseline": self.baseline,
            "seconds": self.seconds,
            "parents": list(self.parents),
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, row: Dict[str, Any]) -> "PhaseRecord":
        return cls(
            phase=row["phase"],
            operation=row["operation"],
            seconds=float(row["seconds"]),
            baseline=row.get("baseline"),
            parents=tuple(row.get("parents", ())),
            params=dict(row.get("params", {})),
            id=row["id"],
            timestamp=row["timestamp"],
        )

    def __repr__(self) -> str:
        parent_lbl = ",".join(self.parents) if self.parents else "<root>"
        who = self.baseline or "-"
        return (
            f"<PhaseRecord {self.timestamp} {self.phase}:{self.operation} "
            f"baseline={who} seconds={self.seconds:.4f} parents={parent_lbl}>"
        )
