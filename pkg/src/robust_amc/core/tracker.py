from __future__ import annotations

import threading
import time

from contextlib import contextmanager
from typing import Any, Iterable, Iterator

from .events import RECORD_CREATED, TRACKER_STARTED, TRACKER_STOPPED, global_bus
from .history import RunHistory
from .record import PhaseKind, PhaseRecord
from .utils import fingerprint


class PhaseHandle:
    """Mutable slot filled in by :meth:`RunTracker.phase` once the block exits."""

    __slots__ = ("params", "record")

    def __init__(self, params: dict[str, Any]) -> None:
        self.params = params
        self.record: PhaseRecord | None = None


class RunTracker:
    """Time pipeline phases and broadcast them on the global event bus."""

    def __init__(self, max_history: int | None = None) -> None:
        self.history = RunHistory(max_len=max_history)
        self._running = False
        self._lock = threading.RLock()

    @property
    def running(self) -> bool:
        return self._running

    def start(self) -> "RunTracker":
        self._running = True
        global_bus.publish(TRACKER_STARTED)
        return self

    def stop(self) -> None:
        self._running = False
        global_bus.publish(TRACKER_STOPPED)

    @staticmethod
    def fingerprint(*parts: Any) -> str:
        """blake2b-128 digest used for config and artifact hashes."""
        return fingerprint(*parts)

    @contextmanager
    def phase(
        self,
        phase: PhaseKind,
        operation: str,
        *,
        baseline: str | None = None,
        parents: Iterable[str] = (),
        **params: Any,
    ) -> Iterator[PhaseHandle]:
        """Time the enclosed block and record it on success.

        Callers may add provenance to ``handle.params`` inside the block; a
        block that raises leaves no record behind.
        """
        handle = PhaseHandle(dict(params))
        t0 = time.perf_counter()
        yield handle
        seconds = time.perf_counter() - t0
        handle.record = self.record(
            phase,
            operation,
            seconds,
            baseline=baseline,
            parents=parents,
            **handle.params,
        )

    def record(
        self,
        phase: PhaseKind,
        operation: str,
        seconds: float,
        *,
        baseline: str | None = None,
        parents: Iterable[str] = (),
        **params: Any,
    ) -> PhaseRecord | None:
        """Low-level record creator for phases timed elsewhere."""
        if not self._running:
            return None

        rec = PhaseRecord(
            phase=phase,
            operation=operation,
            seconds=float(seconds),
            baseline=baseline,
            parents=tuple(str(p) for p in parents),
            params=params,
        )
        with self._lock:
            self.history.append(rec)
        global_bus.publish(RECORD_CREATED, record=rec)
        return rec

    def records(self) -> list[PhaseRecord]:
        with self._lock:
            return list(self.history)
