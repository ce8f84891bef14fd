import logging

from robust_amc.core.events import RECORD_CREATED, global_bus
from robust_amc.core.record import PhaseRecord

_LOG = logging.getLogger("robust_amc.run")


class ConsoleWriter:
    """Subscribe to *record.created* and log a one-liner per finished phase."""

    def __init__(self, level: int = logging.INFO) -> None:
        self._level = level
        # Subscribe once; keep the unsubscribe callback
        self._unsub = global_bus.subscribe(RECORD_CREATED, self._on_record)

    def _on_record(self, record: PhaseRecord) -> None:
        parents = ",".join(record.parents) or "<root>"
        _LOG.log(
            self._level,
            "%s  %-8s %-22s baseline=%-22s %9.3fs  parents=%s",
            record.timestamp,
            record.phase,
            record.operation,
            record.baseline or "-",
            record.seconds,
            parents,
        )

    def close(self) -> None:
        """Detach the writer so it stops logging."""
        self._unsub()
