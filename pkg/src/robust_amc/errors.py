"""Exception hierarchy shared by every subpackage.

Each error also derives from the closest builtin so callers that only know
``ValueError`` / ``RuntimeError`` keep working.
"""

from __future__ import annotations

from typing import Sequence


class RobustAMCError(Exception):
    """Root of all errors raised by robust_amc."""

    kind: str = "runtime"


# --------------------------------------------------------------------------- #
# autodiff
# --------------------------------------------------------------------------- #
class ShapeError(RobustAMCError, ValueError):
    kind = "shape"


class NonFiniteError(RobustAMCError, ValueError):
    kind = "non_finite"


class UnboundVariableError(RobustAMCError, KeyError):
    kind = "unbound_variable"


class UnregisteredVariableError(RobustAMCError, ValueError):
    kind = "unregistered_variable"


class TapeError(RobustAMCError, RuntimeError):
    kind = "tape"


class NonDifferentiablePathError(RobustAMCError, RuntimeError):
    kind = "non_differentiable_path"


# --------------------------------------------------------------------------- #
# signals
# --------------------------------------------------------------------------- #
class SymbolError(RobustAMCError, ValueError):
    kind = "symbol_out_of_range"


class FrameUnderrunError(RobustAMCError, ValueError):
    kind = "frame_underrun"


class ChannelError(RobustAMCError, ValueError):
    kind = "channel"


class DatasetFormatError(RobustAMCError, ValueError):
    """Raised by every binary reader (AMCD / AMCM / AMCP).

    ``kind`` is one of ``bad_magic``, ``version``, ``truncated``, ``checksum``.
    """

    def __init__(self, kind: str, message: str) -> None:
        super().__init__(f"{kind}: {message}")
        self.kind = kind


# --------------------------------------------------------------------------- #
# models / attacks / tasks / meta
# --------------------------------------------------------------------------- #
class TrainingDivergedError(RobustAMCError, RuntimeError):
    kind = "divergence"

    def __init__(
        self,
        message: str,
        *,
        step: int | None = None,
        model_id: str | None = None,
        history: Sequence[float] = (),
    ) -> None:
        prefix = f"[{model_id}] " if model_id else ""
        suffix = f" (step {step})" if step is not None else ""
        super().__init__(f"{prefix}{message}{suffix}")
        self.step = step
        self.model_id = model_id
        self.history = list(history)


class DegenerateGradientError(RobustAMCError, ValueError):
    kind = "degenerate_gradient"


class InsufficientTasksError(RobustAMCError, ValueError):
    kind = "insufficient_tasks"


# --------------------------------------------------------------------------- #
# harness
# --------------------------------------------------------------------------- #
class ShotCountError(RobustAMCError, ValueError):
    kind = "shot_count"


class TimingLogError(RobustAMCError, ValueError):
    kind = "timing_log"


class ReportSchemaError(RobustAMCError, ValueError):
    kind = "report_schema"


class ConfigError(RobustAMCError, ValueError):
    kind = "config"
